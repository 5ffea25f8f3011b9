"""Sigmoid link function and the worst-case slope constants it induces.

Rewards are Bernoulli with success probability mu(z) for a logit z, so
everything downstream (confidence widths, design-matrix weights, regret)
is phrased in terms of mu and its first two derivatives.
"""

import math
from typing import NamedTuple

import numpy as np

# Upper bound on the slope of the link: mu'(z) = mu(1-mu) <= 1/4 everywhere.
R_MAX = 0.25


class LinkEval(NamedTuple):
    mu: float
    dmu: float
    ddmu: float


def link_eval(z: float) -> LinkEval:
    """Evaluate mu, mu', mu'' at a single logit, stably on both tails."""
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"logit must be finite, got {z}")
    if z >= 0:
        mu = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        mu = e / (1.0 + e)
    dmu = mu * (1.0 - mu)
    return LinkEval(mu, dmu, dmu * (1.0 - 2.0 * mu))


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Vectorized mu(z), stable for large |z| (infinities map to 0 and 1)."""
    z = np.asarray(z, dtype=float)
    pos = z >= 0
    e_neg = np.exp(np.where(pos, 0.0, z))
    e_pos = np.exp(np.where(pos, -z, 0.0))
    return np.where(pos, 1.0 / (1.0 + e_pos), e_neg / (1.0 + e_neg))


def dsigmoid(z: np.ndarray) -> np.ndarray:
    """Vectorized mu'(z) = mu(z)(1 - mu(z))."""
    m = sigmoid(z)
    return m * (1.0 - m)


class KappaR(NamedTuple):
    kappa: float
    R: float


def kappa_for_bound(B: float) -> KappaR:
    """Worst-case inverse slope over logits bounded by B, paired with R = 1/4.

    kappa = 1 / mu'(B) is the usual hardness constant of logistic bandits:
    the smallest reward variance an arm with |logit| <= B can have is 1/kappa.
    """
    if B < 0:
        raise ValueError(f"logit bound must be nonnegative, got {B}")
    # 1 / (mu (1-mu)) expands to 2 + e^B + e^-B, which avoids the
    # cancellation in 1 - mu once B is large.
    try:
        kappa = 2.0 + math.exp(B) + math.exp(-B)
    except OverflowError:
        raise OverflowError(
            f"e^B overflows at B={B}; kappa is not representable"
        ) from None
    return KappaR(kappa, R_MAX)
