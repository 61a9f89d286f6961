"""Instrument descriptions and the common pricing-result container."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CapletSpec:
    """Caplet on the forward Libor over [T, T + delta], strike K.

    The premium convention is a payoff (L_T - K)^+ paid at T + delta
    (no extra accrual factor).
    """

    T: float
    delta: float
    K: float

    def __post_init__(self):
        if self.T <= 0 or self.delta <= 0:
            raise ValueError("need T > 0 and delta > 0")
        if 1.0 + self.delta * self.K <= 0:
            raise ValueError("need 1 + delta K > 0")

    @property
    def log_strike(self) -> float:
        """log(1 + delta K), the strike on the forward bond ratio."""
        import math
        return math.log1p(self.delta * self.K)


@dataclass(frozen=True)
class SwaptionSpec:
    """Payer swaption: expiry T on a swap with m periods of length delta."""

    T: float
    m: int
    delta: float
    K: float

    def __post_init__(self):
        if self.T <= 0 or self.m < 1 or self.delta <= 0:
            raise ValueError("need T > 0, m >= 1, delta > 0")


@dataclass
class PriceResult:
    """A price with its accuracy data and implied-vol quotes.

    ``stderr`` is a Monte Carlo standard error where applicable, otherwise
    a numerical tolerance estimate (may be None). Vol quotes are filled
    when the inversion is well posed.
    """

    price: float
    method: str
    stderr: float | None = None
    ci_halfwidth: float | None = None
    normal_vol: float | None = None
    lognormal_vol: float | None = None
    wall_time: float | None = None
    extra: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {
            "method": self.method,
            "price": self.price,
            "stderr": self.stderr,
            "ci_halfwidth": self.ci_halfwidth,
            "normal_vol_bp": None if self.normal_vol is None
            else 1e4 * self.normal_vol,
            "lognormal_vol": self.lognormal_vol,
            "wall_time_s": self.wall_time,
        }
