"""Pricing kernels with closed-form derivative towers, and implied vols.

The expansions apply polynomial differential operators in the log-spot
(Black-Scholes kernel) or spot (Bachelier kernel) to the zeroth-order
price, so derivatives up to order six are needed in closed form. They are
assembled from the Gaussian density and polynomial recursions; nothing is
differentiated numerically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

MAX_ORDER = 6


def _npdf(z):
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class KernelDerivatives:
    """Price and its derivatives in the spot-like variable, orders 0..6."""

    value: float
    derivs: np.ndarray  # derivs[k] = k-th derivative; derivs[0] = value

    def __getitem__(self, k: int) -> float:
        return float(self.derivs[k])

    def apply(self, weights: dict[int, float]) -> float:
        """Sum w_k * d^k over the supplied orders."""
        return float(sum(w * self.derivs[k] for k, w in weights.items()))


def bs_kernel(h: float, v: float, k: float,
              order: int = MAX_ORDER) -> KernelDerivatives:
    """Call on e^h with log-strike k and integrated log variance v.

    value = e^h Phi(d1) - e^k Phi(d2), d1 = (h - k + v/2)/sqrt(v),
    d2 = d1 - sqrt(v). Derivatives are with respect to h:
    d/dh = e^h Phi(d1), and each further derivative adds
    e^h phi(d1) q_n(d1) with q_n built by the recursion
    q_{n+1} = 1/sqrt(v) + (1 - d1/sqrt(v)) q_n + q_n'.
    """
    if v < 0:
        raise ValueError("variance must be nonnegative")
    ds = np.zeros(order + 1)
    if v == 0.0:
        ds[0] = max(np.exp(h) - np.exp(k), 0.0)
        return KernelDerivatives(ds[0], ds)
    sq = np.sqrt(v)
    d1 = (h - k + 0.5 * v) / sq
    d2 = d1 - sq
    eh = np.exp(h)
    phi1 = _npdf(d1)
    ds[0] = eh * ndtr(d1) - np.exp(k) * ndtr(d2)
    if order >= 1:
        ds[1] = eh * ndtr(d1)
    # q_n as polynomial coefficients in d1 (derivative of d1 w.r.t. h = 1/sq)
    q = np.zeros(order + 2)
    for n in range(1, order):
        dq = np.arange(1, q.size) * q[1:] / sq  # q_n'
        q_new = np.zeros_like(q)
        q_new[0] = 1.0 / sq
        q_new += q  # (1 - d1/sq) q_n : the "1 *" part
        q_new[1:] -= q[:-1] / sq  # the "- d1/sq" part shifts degree up
        q_new[: dq.size] += dq
        q = q_new
        ds[n + 1] = eh * (ndtr(d1) + phi1 * np.polyval(q[::-1], d1))
    return KernelDerivatives(float(ds[0]), ds)


def bachelier_kernel(s: float, v: float, K: float,
                     order: int = MAX_ORDER) -> KernelDerivatives:
    """Arithmetic (normal) call with spot s, strike K, total variance v.

    value = (s - K) Phi(d) + sqrt(v) phi(d), d = (s - K)/sqrt(v).
    Derivatives in s: first Phi(d); order n >= 2 equals
    phi^{(n-2)}(d) v^{-(n-1)/2} via the Hermite recursion
    phi^{(m)}(z) = -z phi^{(m-1)}(z) - (m-1) phi^{(m-2)}(z).
    """
    if v < 0:
        raise ValueError("variance must be nonnegative")
    ds = np.zeros(order + 1)
    if v == 0.0:
        ds[0] = max(s - K, 0.0)
        return KernelDerivatives(ds[0], ds)
    sq = np.sqrt(v)
    d = (s - K) / sq
    pdf = _npdf(d)
    ds[0] = (s - K) * ndtr(d) + sq * pdf
    if order >= 1:
        ds[1] = ndtr(d)
    # phi derivatives at d via Hermite recursion
    phi_m = np.zeros(max(order - 1, 0))
    if order >= 2:
        phi_m[0] = pdf
        for m in range(1, order - 1):
            phi_m[m] = -d * phi_m[m - 1] \
                - (m - 1) * (phi_m[m - 2] if m >= 2 else 0.0)
        for n in range(2, order + 1):
            ds[n] = phi_m[n - 2] * sq ** (1 - n)
    return KernelDerivatives(float(ds[0]), ds)


# ---------------------------------------------------------------------------
# Implied volatilities.
# ---------------------------------------------------------------------------

class ImpliedVolError(ValueError):
    """Price outside the arbitrage bounds of the quoting convention."""


def bachelier_price(forward: float, K: float, T: float, vol: float) -> float:
    return bachelier_kernel(forward, vol * vol * T, K, order=0).value


def black_price(forward: float, K: float, T: float, vol: float) -> float:
    if forward <= 0 or K <= 0:
        raise ValueError("Black quoting needs positive forward and strike")
    return bs_kernel(np.log(forward), vol * vol * T, np.log(K), order=0).value


def implied_vol(price: float, forward: float, K: float, T: float,
                convention: str = "normal") -> float:
    """Invert an undiscounted call price to a volatility.

    ``convention`` is "normal" (Bachelier, absolute vol) or "lognormal"
    (Black). Safeguarded Newton with bisection fallback; the round-trip
    reprice error is driven below 1e-12 relative to the vega scale.
    """
    if T <= 0:
        raise ImpliedVolError("need a positive expiry")
    intrinsic = max(forward - K, 0.0)
    if price < intrinsic - 1e-15 * max(1.0, abs(forward)):
        raise ImpliedVolError(
            f"price {price:.6g} below intrinsic {intrinsic:.6g}")
    if convention == "normal":
        pricer = lambda vol: bachelier_price(forward, K, T, vol)
        lo, hi = 0.0, max(abs(forward - K), price, 1e-8) * 4.0
        while pricer(hi) < price:
            hi *= 2.0
            if hi > 1e12:
                raise ImpliedVolError("price not attainable (normal)")
    elif convention == "lognormal":
        if price >= forward:
            raise ImpliedVolError(
                f"price {price:.6g} at or above the forward {forward:.6g}")
        pricer = lambda vol: black_price(forward, K, T, vol)
        lo, hi = 0.0, 1.0
        while pricer(hi) < price:
            hi *= 2.0
            if hi > 1e6:
                raise ImpliedVolError("price not attainable (lognormal)")
    else:
        raise ValueError("convention must be 'normal' or 'lognormal'")

    scale = 1e-12 * max(price, abs(forward - K), 1e-8)
    vol = 0.5 * (lo + hi)
    for _ in range(100):
        err = pricer(vol) - price
        if abs(err) <= scale:
            return vol
        if err > 0:
            hi = vol
        else:
            lo = vol
        # numerical vega by symmetric secant on the bracket midpoints
        dv = max(1e-9, 1e-6 * vol)
        vega = (pricer(vol + dv) - pricer(max(vol - dv, 0.0))) \
            / (dv + min(dv, vol))
        if vega > 0:
            step = vol - err / vega
            vol = step if lo < step < hi else 0.5 * (lo + hi)
        else:
            vol = 0.5 * (lo + hi)
    return vol
