"""Fully connected ReLU reward network trained by full-batch gradient descent.

The network is f(x) = sqrt(m) * W_L relu(W_{L-1} ... relu(W_1 x)) with L
weight matrices of width m. Initialization draws each hidden layer as a
paired block [[W, 0], [0, W]] and the output layer as [w, -w], so that any
context whose two halves coincide is mapped exactly to zero at time zero.
Gradients are computed by hand (relu'(0) = 0 throughout), the training loss
is the Bernoulli negative log-likelihood plus a quadratic regularizer.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from .link import sigmoid

_SNAPSHOT_MAGIC = b"NLGPARAM"
_CLIP = 1e-12


@dataclass
class NetworkParams:
    """Weight matrices [W_1 (m,d), W_2..W_{L-1} (m,m), W_L (1,m)]."""

    weights: list

    @property
    def d(self) -> int:
        return self.weights[0].shape[1]

    @property
    def m(self) -> int:
        return self.weights[0].shape[0]

    @property
    def L(self) -> int:
        return len(self.weights)

    @property
    def p(self) -> int:
        return sum(w.size for w in self.weights)

    def flatten(self) -> np.ndarray:
        return np.concatenate([w.ravel() for w in self.weights])

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights])

    @classmethod
    def from_vector(cls, vec: np.ndarray, d: int, m: int, L: int) -> "NetworkParams":
        vec = np.asarray(vec, dtype=float)
        shapes = layer_shapes(d, m, L)
        if vec.size != sum(r * c for r, c in shapes):
            raise ValueError(
                f"vector of length {vec.size} does not match d={d}, m={m}, L={L}"
            )
        weights, k = [], 0
        for r, c in shapes:
            weights.append(vec[k : k + r * c].reshape(r, c).copy())
            k += r * c
        return cls(weights)


def layer_shapes(d: int, m: int, L: int) -> list:
    if L < 2:
        raise ValueError(f"depth L must be at least 2, got {L}")
    return [(m, d)] + [(m, m)] * (L - 2) + [(1, m)]


def init_network(d: int, m: int, L: int, seed) -> NetworkParams:
    """Draw the paired symmetric initialization.

    Hidden blocks have entries N(0, 4/m), the output halves N(0, 2/m).
    Requires even m and even d so the blocks tile exactly.
    """
    if L < 2:
        raise ValueError(f"depth L must be at least 2, got {L}")
    if m % 2 or m < 2:
        raise ValueError(f"width m must be even and positive, got {m}")
    if d % 2 or d < 2:
        raise ValueError(f"input dimension must be even and positive, got {d}")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    weights = []
    for rows, cols in layer_shapes(d, m, L)[:-1]:
        block = rng.normal(0.0, 2.0 / math.sqrt(m), size=(rows // 2, cols // 2))
        W = np.zeros((rows, cols))
        W[: rows // 2, : cols // 2] = block
        W[rows // 2 :, cols // 2 :] = block
        weights.append(W)
    w = rng.normal(0.0, math.sqrt(2.0 / m), size=m // 2)
    weights.append(np.concatenate([w, -w])[None, :])
    return NetworkParams(weights)


def forward(params: NetworkParams, x: np.ndarray) -> float:
    return float(forward_batch(params, np.asarray(x, dtype=float)[None, :])[0])


def forward_batch(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    """Network outputs for a batch of contexts, shape (n,)."""
    A = np.asarray(X, dtype=float)
    for W in params.weights[:-1]:
        A = np.maximum(A @ W.T, 0.0)
    return math.sqrt(params.m) * (A @ params.weights[-1].ravel())


def gradient(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    return gradient_batch(params, np.asarray(x, dtype=float)[None, :])[0]


def gradient_batch(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    """Per-context gradients of f with respect to the flattened weights, (n, p)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    ws = params.weights
    L, m = params.L, params.m
    acts = [X]
    zs = []
    A = X
    for W in ws[:-1]:
        Z = A @ W.T
        zs.append(Z)
        A = np.maximum(Z, 0.0)
        acts.append(A)
    root_m = math.sqrt(m)
    pieces = [None] * L
    pieces[L - 1] = root_m * acts[L - 1]  # (n, m), gradient w.r.t. W_L
    delta = (root_m * ws[-1].ravel()[None, :]) * (zs[L - 2] > 0)  # (n, m)
    for layer in range(L - 2, -1, -1):
        pieces[layer] = np.einsum("ni,nj->nij", delta, acts[layer]).reshape(n, -1)
        if layer > 0:
            delta = (delta @ ws[layer]) * (zs[layer - 1] > 0)
    return np.concatenate(pieces, axis=1)


def _nll(f: np.ndarray, r: np.ndarray) -> float:
    p = np.clip(sigmoid(f), _CLIP, 1.0 - _CLIP)
    return float(-np.sum(r * np.log(p) + (1.0 - r) * np.log(1.0 - p)))


def loss_value(
    params: NetworkParams,
    X: np.ndarray,
    r: np.ndarray,
    lam: float,
    params0: NetworkParams,
    mode: str = "theory",
) -> float:
    """Regularized negative log-likelihood of the observed rewards.

    mode "theory" anchors the quadratic penalty at the initial weights,
    (m * lam / 2) * ||theta - theta0||^2; mode "practical" uses the plain
    weight decay lam * ||theta||^2.
    """
    X = np.asarray(X, dtype=float)
    r = np.asarray(r, dtype=float)
    nll = _nll(forward_batch(params, X), r) if len(r) else 0.0
    theta = params.flatten()
    if mode == "theory":
        diff = theta - params0.flatten()
        return nll + 0.5 * params.m * lam * float(diff @ diff)
    if mode == "practical":
        return nll + lam * float(theta @ theta)
    raise ValueError(f"unknown mode {mode!r}")


def _loss_gradient(params, X, r, lam, theta0_flat, mode):
    ws = params.weights
    L, m = params.L, params.m
    n = X.shape[0]
    theta = params.flatten()
    if mode == "theory":
        reg = m * lam * (theta - theta0_flat)
    else:
        reg = 2.0 * lam * theta
    if n == 0:
        return reg
    acts = [X]
    zs = []
    A = X
    for W in ws[:-1]:
        Z = A @ W.T
        zs.append(Z)
        A = np.maximum(Z, 0.0)
        acts.append(A)
    root_m = math.sqrt(m)
    f = root_m * (acts[L - 1] @ ws[-1].ravel())
    c = sigmoid(f) - r  # (n,)
    pieces = [None] * L
    pieces[L - 1] = root_m * (c @ acts[L - 1])[None, :]
    delta = (root_m * np.outer(c, ws[-1].ravel())) * (zs[L - 2] > 0)
    for layer in range(L - 2, -1, -1):
        pieces[layer] = delta.T @ acts[layer]
        if layer > 0:
            delta = (delta @ ws[layer]) * (zs[layer - 1] > 0)
    return np.concatenate([g.ravel() for g in pieces]) + reg


@dataclass
class TrainResult:
    params: NetworkParams
    losses: np.ndarray  # length steps + 1, loss before each update and after the last


def train_nn(
    X: np.ndarray,
    r: np.ndarray,
    lam: float,
    eta: float,
    steps: int,
    params0: NetworkParams,
    warm: NetworkParams = None,
    mode: str = "theory",
) -> TrainResult:
    """Run full-batch gradient descent on the regularized NLL.

    Starts from `warm` (the initial weights when omitted) and applies
    theta <- theta - eta * grad exactly `steps` times. Raises if the loss
    ever turns non-finite, reporting the step at which descent diverged.
    """
    if mode not in ("theory", "practical"):
        raise ValueError(f"unknown mode {mode!r}")
    X = np.asarray(X, dtype=float).reshape(len(r), -1) if len(r) else np.zeros((0, params0.d))
    r = np.asarray(r, dtype=float)
    d, m, L = params0.d, params0.m, params0.L
    theta0_flat = params0.flatten()
    current = (warm if warm is not None else params0).copy()
    losses = np.empty(steps + 1)
    for j in range(steps):
        losses[j] = loss_value(current, X, r, lam, params0, mode)
        if not math.isfinite(losses[j]):
            raise ArithmeticError(f"training loss diverged at step {j}")
        vec = current.flatten() - eta * _loss_gradient(
            current, X, r, lam, theta0_flat, mode
        )
        current = NetworkParams.from_vector(vec, d, m, L)
    losses[steps] = loss_value(current, X, r, lam, params0, mode)
    if not math.isfinite(losses[steps]):
        raise ArithmeticError(f"training loss diverged at step {steps}")
    return TrainResult(current, losses)


def width_condition_ok(
    m: int, T: int, K: int, L: int, delta: float, lambda0: float, lambda_h: float, R: float = 0.25
) -> bool:
    """Whether the width meets the (astronomically large) theory requirement.

    Informational only; realistic widths fail it and the algorithms run anyway.
    """
    try:
        need1 = T**4 * K**4 * L**6 * math.log(T**2 * K**2 * L / delta) / lambda_h**4
        need2 = (
            T**7 * L**21 / lambda0
            + T**16 * L**27 / lambda0**7 * R**6
            + T**10 * L**21 / lambda0**4 * R**6
            + T**7 * L**18 / lambda0**4
        )
        return m >= need1 and m / math.log(m) ** 3 >= need2
    except OverflowError:
        return False


def save_params(params: NetworkParams, path) -> None:
    """Write weights as little-endian float64 with a (d, m, L) header."""
    with open(path, "wb") as fh:
        fh.write(_SNAPSHOT_MAGIC)
        fh.write(struct.pack("<III", params.d, params.m, params.L))
        fh.write(params.flatten().astype("<f8").tobytes())


def load_params(path) -> NetworkParams:
    with open(path, "rb") as fh:
        magic = fh.read(len(_SNAPSHOT_MAGIC))
        if magic != _SNAPSHOT_MAGIC:
            raise ValueError(f"{path} is not a network snapshot")
        d, m, L = struct.unpack("<III", fh.read(12))
        vec = np.frombuffer(fh.read(), dtype="<f8")
        return NetworkParams.from_vector(vec, d, m, L)
