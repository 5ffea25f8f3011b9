"""Contextual bandit environments with Bernoulli rewards.

Synthetic environments draw K raw feature vectors per round with entries
uniform on [-1, 1]. A hidden nonlinear function h maps the raw features to
a logit, and the observed reward is Bernoulli(mu(h(x))). The agent never
sees the raw features: every arm is presented in the duplicated unit-norm
form [x; x] / (sqrt(2) ||x||), which the paired network initialization
maps exactly to zero.

The dataset environment turns a labeled CSV into K one-hot block arms per
row: arm k places the (min-max rescaled) feature vector in block k of a
d*K vector, and reward 1 is paid exactly when k equals the label.

All randomness is materialized at construction, so a given seed fully
determines the arm tape and the reward tape, and algorithms sharing a seed
face identical draws.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .link import sigmoid


def symmetrize_context(x: np.ndarray) -> np.ndarray:
    """Duplicate and rescale: [x; x] / (sqrt(2) ||x||), always unit norm."""
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise ValueError("cannot symmetrize the zero vector")
    return np.concatenate([x, x]) / (math.sqrt(2.0) * norm)


def _symmetrize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("cannot symmetrize a zero row")
    return np.concatenate([X, X], axis=1) / (math.sqrt(2.0) * norms)


class BanditEnvironment:
    """Common plumbing: precomputed arm/logit/uniform tapes indexed by round."""

    def __init__(self, arms, logits, uniforms):
        self._arms = arms          # (T, K, d_sym)
        self._logits = logits      # (T, K), +-inf allowed
        self._uniforms = uniforms  # (T, K)
        self.T, self.K, self.dim = arms.shape
        self._opt_dmu_sum = 0.0
        self._opt_rounds = 0

    def round(self, t: int):
        """Arm contexts and hidden logits for round t (1-based)."""
        if not 1 <= t <= self.T:
            raise ValueError(f"round {t} outside 1..{self.T}")
        return self._arms[t - 1], self._logits[t - 1]

    def success_probs(self, t: int) -> np.ndarray:
        return sigmoid(self._logits[t - 1])

    def sample_reward(self, arm: int, t: int) -> int:
        """Bernoulli draw for the chosen arm, deterministic given the seed."""
        p = self.success_probs(t)[arm]
        return int(self._uniforms[t - 1, arm] < p)

    def regret_of(self, arm: int, t: int) -> float:
        """Per-round regret max_k mu(h_k) - mu(h_arm); tracks the optimum's slope."""
        probs = self.success_probs(t)
        best = int(np.argmax(probs))
        self._opt_dmu_sum += probs[best] * (1.0 - probs[best])
        self._opt_rounds += 1
        return float(probs[best] - probs[arm])

    def kappa_star(self) -> float:
        """T / sum_t mu'(h(x_t^*)) over the rounds scored so far."""
        if self._opt_rounds == 0:
            raise ValueError("no rounds scored yet")
        if self._opt_dmu_sum == 0.0:
            return math.inf
        return self._opt_rounds / self._opt_dmu_sum

    def max_abs_logit(self) -> float:
        return float(np.max(np.abs(self._logits)))


REWARD_KINDS = ("h1", "h2", "h3")


class SyntheticEnv(BanditEnvironment):
    """Nonlinear logit families over random box features.

    h1: 0.2 (x^T theta)^4, h2: 20 cos(x^T theta), h3: 5 x^T Theta x,
    with hidden parameters drawn uniform on [-1, 1]. Logits are computed
    on the raw Unif(-1, 1) features; the contexts handed to the agent are
    the same features after symmetrization (which renormalizes them).
    """

    def __init__(self, kind: str, d: int, K: int, T: int, seed):
        if kind not in REWARD_KINDS:
            raise ValueError(f"unknown reward kind {kind!r}")
        rng = np.random.default_rng(seed)
        if kind == "h3":
            hidden = rng.uniform(-1.0, 1.0, size=(d, d))
        else:
            hidden = rng.uniform(-1.0, 1.0, size=d)
        raw = rng.uniform(-1.0, 1.0, size=(T, K, d))
        if kind == "h1":
            logits = 0.2 * (raw @ hidden) ** 4
        elif kind == "h2":
            logits = 20.0 * np.cos(raw @ hidden)
        else:
            logits = 5.0 * np.einsum("tki,ij,tkj->tk", raw, hidden, raw)
        uniforms = rng.uniform(size=(T, K))
        flat = raw.reshape(T * K, d)
        arms = _symmetrize_rows(flat).reshape(T, K, 2 * d)
        super().__init__(arms, logits, uniforms)
        self.kind = kind
        self.hidden = hidden


def load_dataset(path):
    """Read a labeled CSV: header row, feature columns, one `label` column.

    Features are min-max rescaled per column to [-1, 1]; a constant column
    maps to zero. Returns (features, labels).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    if "label" not in header:
        raise ValueError(f"{path} has no `label` column")
    label_col = header.index("label")
    data = np.array([[float(v) for v in row] for row in rows])
    if data.size == 0:
        raise ValueError(f"{path} contains no data rows")
    labels = data[:, label_col].astype(int)
    feats = np.delete(data, label_col, axis=1)
    lo, hi = feats.min(axis=0), feats.max(axis=0)
    span = hi - lo
    scaled = np.zeros_like(feats)
    varying = span > 0
    scaled[:, varying] = 2.0 * (feats[:, varying] - lo[varying]) / span[varying] - 1.0
    return scaled, labels


class DatasetEnv(BanditEnvironment):
    """K-class dataset as a bandit: block arm k is correct iff k == label."""

    def __init__(self, path, T: int, seed):
        feats, labels = load_dataset(path)
        n, d = feats.shape
        K = int(labels.max()) + 1
        if labels.min() < 0:
            raise ValueError("labels must be nonnegative integers")
        rng = np.random.default_rng(seed)
        order = rng.permutation(n)
        idx = np.resize(order, T)  # cycle the shuffled rows if T > n
        arms = np.zeros((T, K, d * K))
        for k in range(K):
            arms[:, k, k * d : (k + 1) * d] = feats[idx]
        logits = np.where(labels[idx][:, None] == np.arange(K)[None, :], np.inf, -np.inf)
        uniforms = rng.uniform(size=(T, K))
        flat = arms.reshape(T * K, d * K)
        arms = _symmetrize_rows(flat).reshape(T, K, 2 * d * K)
        super().__init__(arms, logits, uniforms)
        self.n_rows = n


def make_env(kind: str, d: int, K: int, T: int, seed, dataset_path=None) -> BanditEnvironment:
    if kind == "dataset":
        if dataset_path is None:
            raise ValueError("dataset environment needs a path")
        return DatasetEnv(dataset_path, T, seed)
    return SyntheticEnv(kind, d, K, T, seed)
