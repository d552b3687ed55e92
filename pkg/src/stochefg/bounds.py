"""High-probability regret and saddle-point-gap bounds (natural logarithms)."""

from __future__ import annotations

import math
from dataclasses import dataclass


class BoundError(ValueError):
    pass


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise BoundError(f"p must lie in (0, 1), got {p}")


def _check_T(T: int, minimum: int = 1) -> None:
    if int(T) != T or T < minimum:
        raise BoundError(f"T must be an integer >= {minimum}, got {T}")


def _check_pos(**kw: float) -> None:
    for name, v in kw.items():
        if not v > 0:
            raise BoundError(f"{name} must be positive, got {v}")


def azuma_regret_bound(regret: float, M: float, M_tilde: float, T: int, p: float) -> float:
    """Regret against the true losses, given regret ``regret`` on the estimates."""
    _check_p(p)
    _check_T(T)
    _check_pos(M=M, M_tilde=M_tilde)
    return regret + (M + M_tilde) * math.sqrt(2.0 * T * math.log(1.0 / p))


def gap_probability_bound(
    regret1: float, regret2: float, T: int, p: float, delta: float, m1: float, m2: float
) -> float:
    """Gap of the average profile, holding with probability at least 1 - 2p."""
    _check_p(p)
    _check_T(T)
    _check_pos(delta=delta, m1=m1, m2=m2)
    return (regret1 + regret2) / T + (2.0 * delta + m1 + m2) * math.sqrt(2.0 / T * math.log(1.0 / p))


def freedman_beta(T: int, p: float) -> float:
    return math.sqrt(math.log(3.0 * math.log(T) / (2.0 * p)))


def freedman_regret_bound(regret: float, M: float, M_tilde: float, T: int, p: float, sigma: float) -> float:
    """Variance-aware regret bound; ``sigma`` is the root of the summed conditional variances."""
    _check_p(p)
    _check_T(T, minimum=8)
    _check_pos(M=M, M_tilde=M_tilde)
    if sigma < 0:
        raise BoundError(f"sigma must be nonnegative, got {sigma}")
    beta = freedman_beta(T, p)
    return regret + 4.0 * max(sigma * beta, (M + M_tilde) * beta**2)


def deterministic_regret_bound(L: float, D0: float, T: int) -> float:
    _check_pos(L=L, D0=D0)
    _check_T(T)
    return 2.0 * L * math.sqrt(D0 * T)


@dataclass
class BoundInputs:
    T: int
    p: float = 0.05
    delta: float = 1.0
    M: float | None = None  # defaults to delta
    m1: float | None = None  # M~ per player, default delta
    m2: float | None = None
    regret1: float = 0.0
    regret2: float = 0.0
    sigma: float | None = None
    L: float | None = None
    D0: float | None = None

    def report(self) -> list[tuple[str, float | str]]:
        """(label, value) rows; inapplicable bounds carry a reason instead."""
        M = self.delta if self.M is None else self.M
        m1 = self.delta if self.m1 is None else self.m1
        m2 = self.delta if self.m2 is None else self.m2
        rows: list[tuple[str, float | str]] = [
            ("azuma_regret_p1", azuma_regret_bound(self.regret1, M, m1, self.T, self.p)),
            ("azuma_regret_p2", azuma_regret_bound(self.regret2, M, m2, self.T, self.p)),
            ("gap_probability", gap_probability_bound(self.regret1, self.regret2, self.T, self.p, self.delta, m1, m2)),
        ]
        if self.sigma is None:
            rows.append(("freedman_regret_p1", "needs --sigma"))
        elif self.T < 8:
            rows.append(("freedman_regret_p1", "needs T >= 8"))
        else:
            rows.append(("freedman_regret_p1", freedman_regret_bound(self.regret1, M, m1, self.T, self.p, self.sigma)))
        if self.L is None or self.D0 is None:
            rows.append(("deterministic_regret", "needs --L and --D0"))
        else:
            rows.append(("deterministic_regret", deterministic_regret_bound(self.L, self.D0, self.T)))
        return rows
