"""UCB algorithms for logistic rewards over neural or linear features.

Two modes are supported. Theory mode follows the adaptive schedules
exactly: gradients are taken at the initial weights, design matrices carry
1/m scaling, the ridge kappa*lambda_t (first rule) or lambda_t (second
rule) is refreshed every round, and the network is retrained from scratch
after each observation. Practical mode is the configuration actually used
for long horizons: gradients at the current weights without 1/m, a fixed
grid-searched (nu, lambda), diagonal design matrices, retraining on a
fixed cadence with warm starts, and a data-adaptive width built from the
running effective dimension log det(scale * gram + I).

The second UCB rule differs from the first in one essential way: its
design matrix weights each rank-one update by the estimated reward
variance mu'(f) of the chosen arm, so the bonus adapts to realized
variance rather than the worst case kappa.
"""

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix
from .link import R_MAX, dsigmoid, sigmoid
from .network import (
    forward,
    forward_batch,
    gradient,
    gradient_batch,
    init_network,
    train_nn,
)
from .schedules import Schedule, condition_gd_rate


@dataclass
class AlgorithmConfig:
    mode: str = "practical"
    m: int = 20
    L: int = 2
    nu: float = 1.0
    lam: float = 1.0
    S: float = 1.0
    kappa: float = 10.0
    delta: float = 0.05
    retrain_every: int = 50
    gd_steps: int = 100
    gd_rate: float = 0.01
    C1: float = 1.0
    C6: float = 1.0
    C7: float = 1.0
    matrix_mode: str = None  # None -> "full" in theory mode, "diag" in practical
    clamp_lambda_to_lambda0: bool = False

    def resolved_matrix_mode(self) -> str:
        if self.matrix_mode is not None:
            return self.matrix_mode
        return "full" if self.mode == "theory" else "diag"


def argmax_first(values: np.ndarray) -> int:
    """Index of the maximum, lowest index on ties."""
    return int(np.argmax(values))


class BanditAlgorithm:
    """select/observe state machine shared by all policies."""

    needs_logits = False

    def __init__(self, dim: int, cfg: AlgorithmConfig):
        if cfg.mode not in ("theory", "practical"):
            raise ValueError(f"unknown mode {cfg.mode!r}")
        self.dim = dim
        self.cfg = cfg
        self.t = 0
        self._X = []
        self._r = []

    def ucb_scores(self, arms: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def ucb_score(self, x: np.ndarray) -> float:
        return float(self.ucb_scores(np.asarray(x, dtype=float)[None, :])[0])

    def select_arm(self, arms: np.ndarray) -> int:
        return argmax_first(self.ucb_scores(np.asarray(arms, dtype=float)))

    def observe(self, x: np.ndarray, r: int, t: int) -> None:
        if r not in (0, 1):
            raise ValueError(f"reward must be 0 or 1, got {r!r}")
        if t != self.t + 1:
            raise ValueError(f"expected round {self.t + 1}, got {t}")
        self._X.append(np.asarray(x, dtype=float))
        self._r.append(float(r))
        self.t = t
        self._absorb(self._X[-1], float(r), t)

    def _absorb(self, x, r, t):
        raise NotImplementedError

    def _history(self):
        return np.asarray(self._X), np.asarray(self._r)


class _NeuralAlgorithm(BanditAlgorithm):
    def __init__(self, dim: int, cfg: AlgorithmConfig, seed):
        super().__init__(dim, cfg)
        self.params0 = init_network(dim, cfg.m, cfg.L, seed)
        self.params = self.params0.copy()

    def _retrain_practical(self, t: int) -> None:
        if t % self.cfg.retrain_every:
            return
        X, r = self._history()
        # the loss sums over samples, so step like a sample mean
        eta = self.cfg.gd_rate / t
        self.params = train_nn(
            X, r, self.cfg.lam, eta, self.cfg.gd_steps,
            self.params0, warm=self.params, mode="practical",
        ).params

    def _retrain_theory(self, lam: float, t: int) -> None:
        X, r = self._history()
        eta = condition_gd_rate(self.cfg.m, t, self.cfg.L, lam)
        self.params = train_nn(
            X, r, lam, eta, self.cfg.gd_steps, self.params0, mode="theory"
        ).params



class NeuralLogUcb1(_NeuralAlgorithm):
    """Optimism via mu(f) plus a worst-case-variance width.

    Theory: score = mu(f(x)) + R sqrt(kappa) nu1 ||g0(x)/sqrt(m)|| in the
    (gram + kappa lambda_t I)^{-1} norm, gram = sum g0 g0^T / m.
    Practical: mu(f(x)) + nu sqrt(kappa) ||g(x)|| in the (gram + lambda I)^{-1}
    norm over current-weight gradients; constants are absorbed into nu.
    """

    def __init__(self, dim: int, cfg: AlgorithmConfig, seed):
        super().__init__(dim, cfg, seed)
        self.design = DesignMatrix(self.params0.p, cfg.resolved_matrix_mode())
        if cfg.mode == "theory":
            self.sched = Schedule(
                L=cfg.L, S=cfg.S, delta=cfg.delta, C1=cfg.C1, C6=cfg.C6, C7=cfg.C7,
                clamp_lambda_to_lambda0=cfg.clamp_lambda_to_lambda0,
            )

    def ucb_scores(self, arms: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        means = sigmoid(forward_batch(self.params, arms))
        if cfg.mode == "theory":
            G = gradient_batch(self.params0, arms) / math.sqrt(cfg.m)
            widths = self.design.inv_norms(G, cfg.kappa * self.sched.lambda_t)
            return means + R_MAX * math.sqrt(cfg.kappa) * self.sched.nu1 * widths
        G = gradient_batch(self.params, arms)
        width = math.sqrt(cfg.kappa)
        return means + cfg.nu * width * self.design.inv_norms(G, cfg.lam)

    def _absorb(self, x, r, t):
        cfg = self.cfg
        if cfg.mode == "theory":
            g0 = gradient(self.params0, x) / math.sqrt(cfg.m)
            self.design.update(g0, 1.0)
            logdet = self.design.logdet_ratio(1.0 / (4.0 * self.sched.lambda0))
            self.sched.update(logdet, t)
            self._retrain_theory(self.sched.lambda_t, t)
        else:
            self._retrain_practical(t)
            self.design.update(gradient(self.params, x), 1.0)


class NeuralLogUcb2(_NeuralAlgorithm):
    """Optimism with a variance-weighted design matrix.

    Theory: score = g0(x)^T (theta - theta0) + nu2 ||g0(x)/sqrt(m)|| in the
    (W + lambda_t I)^{-1} norm, where W adds mu'(f(x_i)) g0 g0^T / m with the
    freshly trained weights at insertion time. Practical: mean mu(f) plus a
    kappa-free nu ||g(x)|| width over the variance-weighted gram of
    current-weight gradients.
    """

    def __init__(self, dim: int, cfg: AlgorithmConfig, seed):
        super().__init__(dim, cfg, seed)
        mm = cfg.resolved_matrix_mode()
        self.design = DesignMatrix(self.params0.p, mm)  # variance weighted
        if cfg.mode == "theory":
            self.dim_gram = DesignMatrix(self.params0.p, mm)  # unweighted, for logdets
            self.sched = Schedule(
                L=cfg.L, S=cfg.S, delta=cfg.delta, C1=cfg.C1, C6=cfg.C6, C7=cfg.C7,
                clamp_lambda_to_lambda0=cfg.clamp_lambda_to_lambda0,
            )
            self._theta0_flat = self.params0.flatten()

    def ucb_scores(self, arms: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        if cfg.mode == "theory":
            G0 = gradient_batch(self.params0, arms)
            lin = G0 @ (self.params.flatten() - self._theta0_flat)
            widths = self.design.inv_norms(G0 / math.sqrt(cfg.m), self.sched.lambda_t)
            return lin + self.sched.nu2 * widths
        means = sigmoid(forward_batch(self.params, arms))
        G = gradient_batch(self.params, arms)
        return means + cfg.nu * self.design.inv_norms(G, cfg.lam)

    def _absorb(self, x, r, t):
        cfg = self.cfg
        if cfg.mode == "theory":
            g0 = gradient(self.params0, x) / math.sqrt(cfg.m)
            self.dim_gram.update(g0, 1.0)
            logdet = self.dim_gram.logdet_ratio(1.0 / (4.0 * self.sched.lambda0))
            self.sched.update(logdet, t)
            self._retrain_theory(self.sched.lambda_t, t)
            self.design.update(g0, float(dsigmoid(forward(self.params, x))))
        else:
            self._retrain_practical(t)
            g = gradient(self.params, x)
            self.design.update(g, float(dsigmoid(forward(self.params, x))))


class NcbfUcb(_NeuralAlgorithm):
    """Neural baseline that prices exploration at the worst case throughout:
    gram adds g g^T / kappa and the width carries a full kappa factor."""

    def __init__(self, dim: int, cfg: AlgorithmConfig, seed):
        if cfg.mode != "practical":
            raise ValueError("this baseline is defined in practical mode only")
        super().__init__(dim, cfg, seed)
        self.design = DesignMatrix(self.params0.p, cfg.resolved_matrix_mode())

    def ucb_scores(self, arms: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        means = sigmoid(forward_batch(self.params, arms))
        G = gradient_batch(self.params, arms)
        return means + cfg.nu * cfg.kappa * self.design.inv_norms(G, cfg.lam)

    def _absorb(self, x, r, t):
        self._retrain_practical(t)
        self.design.update(gradient(self.params, x), 1.0 / self.cfg.kappa)


def fit_logistic(X, r, lam, eta, steps, w0):
    """Gradient descent on the l2-regularized logistic NLL, from w0."""
    w = np.asarray(w0, dtype=float).copy()
    X = np.asarray(X, dtype=float)
    r = np.asarray(r, dtype=float)
    for _ in range(steps):
        w -= eta * (X.T @ (sigmoid(X @ w) - r) + 2.0 * lam * w)
    if not np.all(np.isfinite(w)):
        raise ArithmeticError("logistic fit diverged")
    return w


class _LinearAlgorithm(BanditAlgorithm):
    def __init__(self, dim: int, cfg: AlgorithmConfig):
        if cfg.mode != "practical":
            raise ValueError("this baseline is defined in practical mode only")
        super().__init__(dim, cfg)
        self.w_hat = np.zeros(dim)
        self.design = DesignMatrix(dim, cfg.resolved_matrix_mode())

    def _refit(self, t):
        if t % self.cfg.retrain_every:
            return
        X, r = self._history()
        self.w_hat = fit_logistic(
            X, r, self.cfg.lam, self.cfg.gd_rate / t, self.cfg.gd_steps, self.w_hat
        )


class LogisticUcb1(_LinearAlgorithm):
    """Linear-logistic UCB with worst-case sqrt(kappa) width over sum R x x^T."""

    def ucb_scores(self, arms: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        means = sigmoid(arms @ self.w_hat)
        width = math.sqrt(cfg.kappa)
        return means + cfg.nu * width * self.design.inv_norms(arms, cfg.lam)

    def _absorb(self, x, r, t):
        self.design.update(x, R_MAX)
        self._refit(t)


class AdaOfuEcolog(_LinearAlgorithm):
    """Linear-logistic UCB with a variance-weighted design matrix and no
    explicit kappa factor in the width."""

    def ucb_scores(self, arms: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        means = sigmoid(arms @ self.w_hat)
        return means + cfg.nu * self.design.inv_norms(arms, cfg.lam)

    def _absorb(self, x, r, t):
        self.design.update(x, float(dsigmoid(x @ self.w_hat)))
        self._refit(t)


class OracleBest(BanditAlgorithm):
    """Diagnostic policy that reads the hidden logits; zero regret by design."""

    needs_logits = True

    def select_from_logits(self, logits: np.ndarray) -> int:
        return argmax_first(logits)

    def ucb_scores(self, arms: np.ndarray) -> np.ndarray:
        raise RuntimeError("the oracle scores logits, not contexts")

    def _absorb(self, x, r, t):
        pass


ALGORITHMS = {
    "neural-log-ucb-1": NeuralLogUcb1,
    "neural-log-ucb-2": NeuralLogUcb2,
    "ncbf-ucb": NcbfUcb,
    "logistic-ucb-1": LogisticUcb1,
    "ada-ofu-ecolog": AdaOfuEcolog,
    "oracle": OracleBest,
}


def make_algorithm(name: str, dim: int, cfg: AlgorithmConfig, seed) -> BanditAlgorithm:
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}") from None
    if issubclass(cls, _NeuralAlgorithm):
        return cls(dim, cfg, seed)
    return cls(dim, cfg)
