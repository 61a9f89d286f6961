"""Discount curves and the market quantities read off them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiscountCurve:
    """Zero-coupon price curve with log-linear interpolation in price.

    Pillars must start at 0 with P(0) = 1 and be strictly increasing;
    prices must be strictly positive. Log-linear interpolation preserves
    positivity and is exact for piecewise-flat forward rates.
    """

    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        pr = np.asarray(self.prices, dtype=float).reshape(-1)
        if t.size != pr.size or t.size < 2:
            raise ValueError("curve needs matching times/prices, >= 2 pillars")
        if t[0] != 0.0 or abs(pr[0] - 1.0) > 1e-12:
            raise ValueError("curve must start at t=0 with P(0)=1")
        if np.any(np.diff(t) <= 0):
            raise ValueError("pillar times must be strictly increasing")
        if np.any(pr <= 0):
            raise ValueError("zero-coupon prices must be strictly positive")
        t.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "prices", pr)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        """Interpolated zero-coupon price(s) at time(s) t."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon + 1e-12):
            raise ValueError(
                f"curve covers [0, {self.horizon:g}], asked for {t}")
        out = np.exp(np.interp(t, self.times, np.log(self.prices)))
        return float(out) if out.ndim == 0 else out

    @staticmethod
    def flat(rate: float, horizon: float, n_pillars: int = 2) -> "DiscountCurve":
        """Curve with a constant continuously-compounded zero rate."""
        t = np.linspace(0.0, horizon, max(2, n_pillars))
        return DiscountCurve(t, np.exp(-rate * t))


def forward_libor(curve: DiscountCurve, T: float, delta: float) -> float:
    """Simply-compounded forward rate for the accrual period [T, T+delta]."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return (curve(T) / curve(T + delta) - 1.0) / delta


def forward_swap(curve: DiscountCurve, T: float, m: int, delta: float):
    """Forward swap rate over [T, T + m*delta] plus annuity and weights.

    Returns
    -------
    rate : float
        (P(T) - P(T+m*delta)) / annuity.
    annuity : float
        delta * sum_i P(T + i*delta), i = 1..m.
    weights : (m,) ndarray
        P(T + i*delta) / sum_j P(T + j*delta); positive, summing to 1.
    """
    if m < 1 or delta <= 0:
        raise ValueError("need m >= 1 and delta > 0")
    pay = curve(T + delta * np.arange(1, m + 1))
    pay = np.atleast_1d(pay)
    total = pay.sum()
    annuity = delta * total
    rate = (curve(T) - pay[-1]) / annuity
    return rate, float(annuity), pay / total
