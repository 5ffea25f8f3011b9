"""Design matrices for elliptical confidence widths.

The gram part sum_i w_i v_i v_i^T is stored unregularized because the
ridge term changes from round to round; every query passes the current
regularizer c and works with (gram + c I). Mode "full" keeps the dense
matrix and factorizes on demand (with a cached Cholesky per state), mode
"diag" keeps only the diagonal, which is the approximation used for the
large bandit runs.
"""

import logging
import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

log = logging.getLogger(__name__)


class DesignMatrix:
    def __init__(self, p: int, mode: str = "full"):
        if mode not in ("full", "diag"):
            raise ValueError(f"unknown mode {mode!r}")
        self.p = p
        self.mode = mode
        self.count = 0
        self._version = 0
        self._cho = None
        self._cho_key = None
        self.gram = np.zeros((p, p)) if mode == "full" else np.zeros(p)

    def update(self, v: np.ndarray, weight: float = 1.0) -> None:
        """Add weight * v v^T to the gram part."""
        if weight < 0:
            raise ValueError(f"update weight must be nonnegative, got {weight}")
        v = np.asarray(v, dtype=float)
        if v.shape != (self.p,):
            raise ValueError(f"expected vector of length {self.p}, got {v.shape}")
        if self.mode == "full":
            self.gram += weight * np.outer(v, v)
        else:
            self.gram += weight * v * v
        self.count += 1
        self._version += 1

    def _factor(self, reg: float):
        key = (self._version, reg)
        if self._cho_key != key:
            A = self.gram + reg * np.eye(self.p)
            try:
                self._cho = cho_factor(A)
            except LinAlgError:
                jitter = 1e-10 * np.trace(A) / self.p
                log.warning("Cholesky failed at reg=%g; retrying with jitter %g", reg, jitter)
                self._cho = cho_factor(A + jitter * np.eye(self.p))
            self._cho_key = key
        return self._cho

    def inv_norm(self, v: np.ndarray, reg: float) -> float:
        """sqrt(v^T (gram + reg I)^{-1} v)."""
        if reg <= 0:
            raise ValueError(f"regularizer must be positive, got {reg}")
        v = np.asarray(v, dtype=float)
        if self.mode == "diag":
            return math.sqrt(float(np.sum(v * v / (self.gram + reg))))
        return math.sqrt(float(v @ cho_solve(self._factor(reg), v)))

    def inv_norms(self, V: np.ndarray, reg: float) -> np.ndarray:
        """Row-wise inv_norm for a stack of vectors, shape (n,)."""
        if reg <= 0:
            raise ValueError(f"regularizer must be positive, got {reg}")
        V = np.asarray(V, dtype=float)
        if self.mode == "diag":
            return np.sqrt(np.sum(V * V / (self.gram + reg), axis=1))
        sol = cho_solve(self._factor(reg), V.T)
        return np.sqrt(np.einsum("ij,ji->i", V, sol))

    def logdet_ratio(self, scale: float) -> float:
        """log det(scale * gram + I), the data-dependent part of the widths."""
        if scale < 0:
            raise ValueError(f"scale must be nonnegative, got {scale}")
        if self.mode == "diag":
            return float(np.sum(np.log1p(scale * self.gram)))
        sign, value = np.linalg.slogdet(scale * self.gram + np.eye(self.p))
        return float(value)


def effective_dimension(dm: DesignMatrix, R: float, lambda0: float) -> float:
    """log det((R / lambda0) * gram + I), a data-driven dimension proxy."""
    return dm.logdet_ratio(R / lambda0)


class ShermanMorrisonInverse:
    """Incrementally maintained (A + reg I)^{-1} and log det for a fixed ridge.

    Used where the regularizer never changes, so each rank-one update costs
    O(p^2) instead of a fresh factorization.
    """

    def __init__(self, p: int, reg: float):
        if reg <= 0:
            raise ValueError(f"regularizer must be positive, got {reg}")
        self.p = p
        self.reg = reg
        self.inv = np.eye(p) / reg
        self.logdet = p * math.log(reg)

    def update(self, v: np.ndarray, weight: float = 1.0) -> None:
        if weight < 0:
            raise ValueError(f"update weight must be nonnegative, got {weight}")
        v = np.asarray(v, dtype=float)
        iv = self.inv @ v
        denom = 1.0 + weight * float(v @ iv)
        self.inv -= (weight / denom) * np.outer(iv, iv)
        self.logdet += math.log(denom)

    def quad(self, v: np.ndarray) -> float:
        """v^T (A + reg I)^{-1} v."""
        v = np.asarray(v, dtype=float)
        return float(v @ self.inv @ v)

    def logdet_ratio(self) -> float:
        """log det((A + reg I) / (reg I))."""
        return self.logdet - self.p * math.log(self.reg)
