"""Monte Carlo checks of self-normalized tail bounds for Bernoulli noise.

A trial simulates s_t = sum_i x_i eta_i with eta_i = r_i - mu(x_i^T theta*)
(centered Bernoulli, so E[eta^2 | past] = mu'(x_i^T theta*) exactly) and
tracks Z_t = ||s_t||_{H_t^{-1}} with H_t = sum_i mu'(x_i^T theta*) x_i x_i^T
+ lam I. Three bounds are evaluated along the same trajectory, each fed the
log-determinant statistic of the matrix its own analysis uses: the
variance-weighted H_t for the first, the unweighted V_t = sum_i x_i x_i^T
+ lam I for the other two.

  theorem1         variance-adaptive, 8 sqrt(logdet_H * log(4 t^2/delta))
                   + (4 M N / sqrt(lam)) log(4 t^2/delta)
  hoeffding_kappa  worst-case kappa inflation of the unweighted design,
                   M sqrt(kappa logdet_V + 2 kappa log(1/delta))
  faury            (2 M N / sqrt(lam)) (logdet_V / 2 + log(1/delta)
                   + d log 2) + sqrt(lam) / (2 M N); the d log 2 term
                   charges the ambient dimension no matter how the
                   trajectory's variances behave

A violation is Z_t exceeding the bound at any step of the horizon.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .design import ShermanMorrisonInverse
from .link import kappa_for_bound, link_eval

VARIANTS = ("theorem1", "hoeffding_kappa", "faury")


@dataclass
class TrialConfig:
    d: int = 5
    horizon: int = 500
    delta: float = 0.05
    lam: float = 1.0
    M: float = 1.0
    N: float = 1.0
    theta_star: np.ndarray = None  # zero vector when omitted
    aligned: bool = False  # x_t = N e_1 instead of i.i.d. random directions

    def resolved_theta(self) -> np.ndarray:
        if self.theta_star is None:
            return np.zeros(self.d)
        theta = np.asarray(self.theta_star, dtype=float)
        if theta.shape != (self.d,):
            raise ValueError(f"theta_star must have shape ({self.d},)")
        return theta

    def kappa(self) -> float:
        """Worst case over the reachable logits |x^T theta*| <= N ||theta*||."""
        return kappa_for_bound(self.N * float(np.linalg.norm(self.resolved_theta()))).kappa


def bound_value(
    variant: str,
    t: int,
    delta: float,
    lam: float,
    logdet: float,
    M: float = 1.0,
    N: float = 1.0,
    d: int = None,
    kappa: float = None,
) -> float:
    """Evaluate one tail bound from its log-determinant statistic.

    For `theorem1` the statistic is log det(H_t / (lam I)) of the
    variance-weighted design; for `hoeffding_kappa` and `faury` it is
    log det(V_t / (lam I)) of the unweighted design V_t = sum x x^T
    + lam I, the matrix those analyses are stated for.
    """
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    if logdet < 0:
        raise ValueError(f"logdet must be nonnegative, got {logdet}")
    if variant == "theorem1":
        tail = math.log(4.0 * t * t / delta)
        return 8.0 * math.sqrt(logdet * tail) + 4.0 * M * N / math.sqrt(lam) * tail
    if variant == "hoeffding_kappa":
        if kappa is None:
            raise ValueError("hoeffding_kappa needs kappa")
        return M * math.sqrt(kappa * logdet + 2.0 * kappa * math.log(1.0 / delta))
    if variant == "faury":
        if d is None:
            raise ValueError("faury needs the dimension d")
        lip = M * N  # slope constant evaluated at the context-norm bound
        return (2.0 * lip / math.sqrt(lam)) * (
            0.5 * logdet + math.log(1.0 / delta) + d * math.log(2.0)
        ) + math.sqrt(lam) / (2.0 * lip)
    raise ValueError(f"unknown bound variant {variant!r}")


@dataclass
class MartingaleTrial:
    Z: np.ndarray
    logdet_H: np.ndarray
    logdet_V: np.ndarray
    bounds: dict
    violated: dict
    kappa: float


def run_martingale_trial(cfg: TrialConfig, seed) -> MartingaleTrial:
    """Simulate one noise trajectory and score every bound variant along it."""
    rng = np.random.default_rng(seed)
    theta = cfg.resolved_theta()
    kappa = cfg.kappa()
    H = ShermanMorrisonInverse(cfg.d, cfg.lam)
    V = ShermanMorrisonInverse(cfg.d, cfg.lam)
    s = np.zeros(cfg.d)
    n = cfg.horizon
    Z = np.empty(n)
    logdet_H = np.empty(n)
    logdet_V = np.empty(n)
    for i in range(n):
        if cfg.aligned:
            x = np.zeros(cfg.d)
            x[0] = cfg.N
        else:
            x = rng.normal(size=cfg.d)
            x *= cfg.N / np.linalg.norm(x)
        mu, dmu, _ = link_eval(float(x @ theta))
        eta = float(rng.random() < mu) - mu
        s += eta * x
        H.update(x, dmu)
        V.update(x, 1.0)
        Z[i] = math.sqrt(max(H.quad(s), 0.0))
        logdet_H[i] = H.logdet_ratio()
        logdet_V[i] = V.logdet_ratio()
    ts = np.arange(1, n + 1)
    tail = np.log(4.0 * ts * ts / cfg.delta)
    bounds = {
        "theorem1": 8.0 * np.sqrt(logdet_H * tail)
        + 4.0 * cfg.M * cfg.N / math.sqrt(cfg.lam) * tail,
        "hoeffding_kappa": cfg.M
        * np.sqrt(kappa * logdet_V + 2.0 * kappa * math.log(1.0 / cfg.delta)),
        "faury": (2.0 * cfg.M * cfg.N / math.sqrt(cfg.lam))
        * (0.5 * logdet_V + math.log(1.0 / cfg.delta) + cfg.d * math.log(2.0))
        + math.sqrt(cfg.lam) / (2.0 * cfg.M * cfg.N),
    }
    violated = {v: bool(np.any(Z > b)) for v, b in bounds.items()}
    return MartingaleTrial(Z, logdet_H, logdet_V, bounds, violated, kappa)


@dataclass
class ViolationReport:
    cfg: TrialConfig
    n_trials: int
    violation_rate: dict
    violation_se: dict
    mean_slack: dict
    ratio_quantiles: dict
    final_Z: np.ndarray = field(repr=False)
    final_bounds: dict = field(repr=False)


def violation_report(cfg: TrialConfig, n_trials: int, base_seed: int = 0) -> ViolationReport:
    """Run independent trials and aggregate violation statistics per variant."""
    trials = [run_martingale_trial(cfg, (base_seed, i)) for i in range(n_trials)]
    final_Z = np.array([tr.Z[-1] for tr in trials])
    rate, se, slack, quants, finals = {}, {}, {}, {}, {}
    for v in VARIANTS:
        hits = np.array([tr.violated[v] for tr in trials], dtype=float)
        p = float(hits.mean())
        rate[v] = p
        se[v] = math.sqrt(p * (1.0 - p) / n_trials)
        fb = np.array([tr.bounds[v][-1] for tr in trials])
        finals[v] = fb
        slack[v] = float(np.mean(fb - final_Z))
        ratio = fb / np.maximum(final_Z, 1e-12)
        quants[v] = tuple(float(q) for q in np.quantile(ratio, [0.05, 0.5, 0.95]))
    return ViolationReport(cfg, n_trials, rate, se, slack, quants, final_Z, finals)


def export_trials_csv(path, cfg: TrialConfig, n_trials: int, base_seed: int = 0) -> None:
    """One row per (variant, trial): the peak statistic against its bound."""
    lines = ["variant,trial,horizon,max_Z,bound_at_max,violated"]
    for i in range(n_trials):
        tr = run_martingale_trial(cfg, (base_seed, i))
        peak = int(np.argmax(tr.Z))
        for v in VARIANTS:
            lines.append(
                f"{v},{i},{cfg.horizon},{tr.Z[peak]:.10g},"
                f"{tr.bounds[v][peak]:.10g},{int(tr.violated[v])}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
