"""Constant-covariance (purely Gaussian) limit of the model.

With epsilon = 0 and omega = -(b x + x b') the covariance driver stays at
its initial value and the factors are an Ornstein-Uhlenbeck process with
covariance V = c x c'. Everything here is closed form up to a
one-dimensional quadrature in time.
"""
from __future__ import annotations

import numpy as np

#: default quadrature step (in years) for time integrals
QUAD_STEP = 1.0 / 20.0


def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z, stable at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = np.abs(z) > 1e-12
    out[nz] = np.expm1(z[nz]) / z[nz]
    small = ~nz
    out[small] = 1.0 + z[small] / 2.0
    return out


def support_B(tau, kappa: np.ndarray) -> np.ndarray:
    """Support function mapping factor shocks to log-bond-price moves.

    B_i(tau) = -(1 - exp(-kappa_i tau)) / kappa_i, extended continuously
    to kappa_i = 0 where it equals -tau. Decreasing in tau from 0 toward
    -1/kappa_i.

    ``tau`` may be a scalar or an array; the kappa axis is appended last.
    """
    kappa = np.asarray(kappa, dtype=float)
    tau_arr = np.asarray(tau, dtype=float)
    z = -np.multiply.outer(tau_arr, kappa)
    out = -tau_arr[..., None] * _phi1(z)
    return out if tau_arr.ndim else out.reshape(kappa.shape)


def _trapezoid_grid(a: float, b: float, step: float) -> np.ndarray:
    n = max(1, int(np.ceil((b - a) / step - 1e-12)))
    return np.linspace(a, b, n + 1)


def lgm_log_bond_drift(tau: float, params, V: np.ndarray,
                       step: float = QUAD_STEP) -> float:
    """E(tau) such that P = exp(E + B'y) prices bonds under constant V.

    E(tau) = -phi tau + int_0^tau B(s)' kappa theta + B(s)' V B(s) / 2 ds,
    evaluated with a composite trapezoid rule.
    """
    if tau == 0.0:
        return 0.0
    s = _trapezoid_grid(0.0, tau, step)
    Bs = support_B(s, params.kappa)
    integrand = Bs @ (params.kappa * params.theta) \
        + 0.5 * np.einsum("ij,jk,ik->i", Bs, V, Bs)
    return float(-params.phi * tau + np.trapezoid(integrand, s))


def lgm_zc_price(t: float, T: float, y: np.ndarray, params,
                 V: np.ndarray | None = None,
                 step: float = QUAD_STEP) -> float:
    """Zero-coupon price in the constant-covariance limit.

    ``V`` defaults to c x0 c'. Requires 0 <= t <= T.
    """
    if not 0.0 <= t <= T:
        raise ValueError("need 0 <= t <= T")
    if V is None:
        V = params.c @ params.x0 @ params.c.T
    tau = T - t
    E = lgm_log_bond_drift(tau, params, V, step)
    B = support_B(tau, params.kappa)
    return float(np.exp(E + B @ np.asarray(y, dtype=float)))


def lgm_caplet_lognormal_var(t: float, T: float, delta: float,
                             V: np.ndarray, kappa: np.ndarray,
                             step: float = QUAD_STEP) -> float:
    """Integrated log-normal variance of the forward bond ratio.

    int_t^T [B(T-u) - B(T+delta-u)]' V [B(T-u) - B(T+delta-u)] du.
    Strike-independent: the constant-covariance model has a flat smile.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if t >= T:
        return 0.0
    u = _trapezoid_grid(t, T, step)
    dB = support_B(T - u, kappa) - support_B(T + delta - u, kappa)
    vals = np.einsum("ij,jk,ik->i", dB, V, dB)
    return float(np.trapezoid(vals, u))


def swap_support_B(u, T: float, m: int, delta: float, kappa: np.ndarray,
                   weights: np.ndarray, w0: float, S0: float) -> np.ndarray:
    """Frozen-weight support function of the forward swap rate.

    B_S(u) = w0 B(T-u) - w_m B(T+m delta-u) - S0 sum_k w_k B(T+k delta-u),
    where w_k are the annuity weights and w0 = P(T)/sum_i P(T+i delta).
    """
    w = np.asarray(weights, dtype=float)
    out = w0 * support_B(T - np.asarray(u), kappa) \
        - w[-1] * support_B(T + m * delta - np.asarray(u), kappa)
    for k in range(1, m + 1):
        out = out - S0 * w[k - 1] * support_B(T + k * delta - np.asarray(u),
                                              kappa)
    return out


def lgm_swaption_normal_var(t: float, T: float, m: int, delta: float,
                            V: np.ndarray, kappa: np.ndarray, curve,
                            step: float = QUAD_STEP) -> float:
    """Integrated normal variance of the frozen-weight forward swap rate."""
    from .curves import forward_swap
    if t >= T:
        return 0.0
    S0, _, weights = forward_swap(curve, T, m, delta)
    pay = np.atleast_1d(curve(T + delta * np.arange(1, m + 1)))
    w0 = float(curve(T) / pay.sum())
    u = _trapezoid_grid(t, T, step)
    BS = swap_support_B(u, T, m, delta, kappa, weights, w0, S0)
    vals = np.einsum("ij,jk,ik->i", BS, V, BS)
    return float(np.trapezoid(vals, u))


def support_weight(i: int, j: int, tau: float, delta: float,
                   kappa: np.ndarray) -> float:
    """Weight of V_ij in the annualized caplet variance.

    m_ij(tau, delta) = zeta_i(delta) zeta_j(delta)
                       (1 - e^{-(k_i+k_j) tau}) / ((k_i+k_j) tau),
    with zeta_i(delta) = (1 - e^{-k_i delta}) / k_i. Symmetric in (i, j).
    """
    if tau <= 0 or delta <= 0:
        raise ValueError("tau and delta must be positive")
    k = np.asarray(kappa, dtype=float)
    zi = delta * _phi1(np.array(-k[i] * delta))
    zj = delta * _phi1(np.array(-k[j] * delta))
    ks = k[i] + k[j]
    tail = _phi1(np.array(-ks * tau))
    return float(zi * zj * tail)
