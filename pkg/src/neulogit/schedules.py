"""Round-by-round regularization and confidence-width schedules.

All quantities are driven by the running log-determinant of the scaled
gradient design matrix and the round index: lambda_t sets the ridge put in
front of the identity, iota_t is the self-normalized deviation radius, and
nu1/nu2 convert it into the widths used by the two UCB rules. Constants
C1, C6, C7 default to one; at that default lambda_1 sits below lambda_0,
so an optional clamp (off by default) can pin lambda_t >= lambda_0.
"""

import math
from dataclasses import dataclass, field


def init_lambda0(C1: float, L: int, S: float, delta: float) -> float:
    """Base ridge 8 sqrt(2) C1 sqrt(L) log(4/delta) / S."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if S <= 0 or L < 1 or C1 <= 0:
        raise ValueError("C1, L and S must be positive")
    return 8.0 * math.sqrt(2.0) * C1 * math.sqrt(L) / S * math.log(4.0 / delta)


@dataclass
class Schedule:
    L: int
    S: float = 1.0
    delta: float = 0.05
    C1: float = 1.0
    C6: float = 1.0
    C7: float = 1.0
    clamp_lambda_to_lambda0: bool = False
    lambda0: float = field(init=False)
    t: int = field(init=False, default=0)
    iota_t: float = field(init=False, default=0.0)
    nu1: float = field(init=False, default=1.0)
    nu2: float = field(init=False, default=1.0)

    def __post_init__(self):
        self.lambda0 = init_lambda0(self.C1, self.L, self.S, self.delta)
        self.lambda_t = self.lambda0

    def update(self, logdet: float, t: int) -> None:
        """Advance to round t given log det(scaled gram + I) over rounds 1..t."""
        if t < 1:
            raise ValueError(f"round index must be >= 1, got {t}")
        if logdet < 0:
            raise ValueError(f"logdet must be nonnegative, got {logdet}")
        tail = math.log(4.0 * t * t / self.delta)
        self.iota_t = 16.0 * math.sqrt(logdet * tail) + 8.0 * self.C1 * math.sqrt(
            self.L / self.lambda0
        ) * tail
        self.lambda_t = (64.0 / self.S**2) * logdet * tail + (
            16.0 * self.C1**2 * self.L / (self.S**2 * self.lambda0)
        ) * tail**2
        if self.clamp_lambda_to_lambda0:
            self.lambda_t = max(self.lambda_t, self.lambda0)
        poly = 1.0 + math.sqrt(self.L) * self.S + self.L * self.S**2
        self.nu1 = self.C6 * poly * self.iota_t + 1.0
        self.nu2 = self.C7 * poly * self.iota_t + 1.0
        self.t = t


def condition_gd_rate(m: int, t: int, L: int, lam: float, C5: float = 1.0) -> float:
    """Theory step size C5 / (m t L + m lam); safe for the anchored loss."""
    return C5 / (m * t * L + m * lam)


def condition_gd_steps(T: int, L: int, lam: float, S: float, C4: float = 1.0) -> int:
    """Theory iteration count; the printed form is a magnitude, so take |log|."""
    ratio = lam * S / (math.sqrt(T) * lam + C4 * T**1.5 * L)
    return max(1, math.ceil(2.0 * abs(math.log(ratio)) * T * L / lam))
