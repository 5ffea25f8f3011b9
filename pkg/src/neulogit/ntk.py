"""Closed-form neural tangent kernel for the ReLU architecture.

The depth-L recursion over pairwise covariances uses the arc-cosine
identities: for (u, v) centered Gaussian with correlation rho and standard
deviations s_u, s_v,

    E[relu(u) relu(v)]     = s_u s_v / (2 pi) * (sqrt(1-rho^2) + rho (pi - arccos rho))
    E[1(u>=0) 1(v>=0)]     = (pi - arccos rho) / (2 pi)

so no sampling is needed. Contexts must be unit norm, which keeps every
level's diagonal equal to one.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


@dataclass
class NtkMatrix:
    H: np.ndarray
    L: int
    lambda_min: float


def ntk_matrix(contexts: np.ndarray, L: int) -> NtkMatrix:
    """Kernel matrix H = (accumulated + top-level covariance) / 2 over contexts."""
    if L < 2:
        raise ValueError(f"depth L must be at least 2, got {L}")
    X = np.asarray(contexts, dtype=float)
    if X.ndim != 2:
        raise ValueError("contexts must be a 2-d array, one row per context")
    norms = np.linalg.norm(X, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise ValueError("contexts must be unit norm")
    cov = X @ X.T  # level-1 covariance
    acc = cov.copy()
    for _ in range(L - 1):
        sd = np.sqrt(np.diag(cov))
        outer_sd = np.outer(sd, sd)
        rho = np.clip(cov / outer_sd, -1.0, 1.0)
        phi = np.arccos(rho)
        cov = outer_sd / np.pi * (np.sqrt(1.0 - rho**2) + rho * (np.pi - phi))
        acc = acc * (np.pi - phi) / np.pi + cov
    H = (acc + cov) / 2.0
    return NtkMatrix(H, L, float(np.linalg.eigvalsh(H)[0]))


def norm_param_S(hvec: np.ndarray, kernel: NtkMatrix) -> float:
    """sqrt(2 h^T H^{-1} h), the kernel norm surrogate for the reward function."""
    if kernel.lambda_min <= 1e-10:
        raise ValueError(
            "kernel matrix is numerically singular (duplicate or parallel "
            "contexts); the norm parameter is undefined"
        )
    h = np.asarray(hvec, dtype=float)
    return math.sqrt(2.0 * float(h @ cho_solve(cho_factor(kernel.H), h)))
