"""Matrix Riccati systems for the exponential-affine transforms.

The Laplace/characteristic transform of (X_T, Y_T), with optional running
weights on the state, is exp(eta + Tr(g X_t) + lambda' Y_t) where lambda
is closed form and (g, eta) solve a matrix Riccati differential equation.
Zero-coupon bonds and the forward-measure transforms used by the Fourier
pricer are specializations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lgm import _phi1
from .params import ModelParams, is_psd, validate_params

#: Frobenius-norm threshold above which the quadratic ODE is declared blown up
BLOW_UP_THRESHOLD = 1e8

#: grid size for the time-dependent part of the non-explosion certificate
CERT_GRID = 512


class BlowUpError(RuntimeError):
    """Quadratic transform ODE left the certified region before the horizon."""

    def __init__(self, message: str, blow_time: float):
        super().__init__(message)
        self.blow_time = blow_time


class RangeError(ValueError):
    """Evaluation requested outside the solved time range."""


# ---------------------------------------------------------------------------
# Embedded Dormand-Prince 5(4) integrator with per-step post-processing.
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                    -17253 / 339200, 22 / 525, -1 / 40])


def _rk45(fun, t0: float, t1: float, y0: np.ndarray, rtol: float,
          atol: float, post=None, blow_norm=None):
    """Adaptive 5(4) Runge-Kutta from t0 to t1 on a flat state vector.

    ``post`` is applied to every accepted state (re-projection), and
    ``blow_norm(y)`` > BLOW_UP_THRESHOLD or a non-finite state halts the
    integration early.

    Returns (ts, ys, fs, blew_up, t_end): the accepted grid, states, slopes.
    """
    span = t1 - t0
    t, y = t0, y0.copy()
    f = fun(t, y)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    h = span * 1e-3
    h_min = max(span * 1e-13, 1e-15)
    blew_up = False
    k = np.empty((7, y.size), dtype=y.dtype)
    while t < t1 - 1e-14 * span:
        h = min(h, t1 - t)
        k[0] = f
        bad = False
        for i in range(5):
            yi = y + h * (_DP_A[i] @ k[: i + 1])
            if not np.all(np.isfinite(yi)):
                bad = True
                break
            k[i + 1] = fun(t + _DP_C[i + 1] * h, yi)
        if not bad:
            y_new = y + h * (_DP_B5 @ k[:6])
            if np.all(np.isfinite(y_new)):
                k[6] = fun(t + h, y_new)
                err_vec = h * (_DP_ERR @ k)
                scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
                err = np.sqrt(np.mean(np.abs(err_vec / scale) ** 2))
            else:
                bad = True
        if bad or not np.isfinite(err):
            h *= 0.25
            if h < h_min:
                blew_up = True
                break
            continue
        if err <= 1.0:
            t += h
            y = post(y_new) if post is not None else y_new
            f = k[6] if post is None else fun(t, y)
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            if blow_norm is not None and blow_norm(y) > BLOW_UP_THRESHOLD:
                blew_up = True
                break
        h *= min(5.0, max(0.2, 0.9 * err ** -0.2 if err > 0 else 5.0))
        if h < h_min:
            blew_up = True
            break
    return (np.array(ts), np.array(ys), np.array(fs), blew_up, t)


def _hermite_eval(ts, ys, fs, t):
    """Cubic Hermite evaluation on the accepted grid (scalar t)."""
    i = int(np.searchsorted(ts, t, side="right") - 1)
    i = min(max(i, 0), len(ts) - 2)
    h = ts[i + 1] - ts[i]
    s = (t - ts[i]) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return (h00 * ys[i] + h10 * h * fs[i] + h01 * ys[i + 1]
            + h11 * h * fs[i + 1])


# ---------------------------------------------------------------------------
# Transform queries and solutions.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaplaceQuery:
    """Terminal weights (Lambda, Gamma) and running weights on the state.

    The transform computed is
    E[exp(Tr(Gamma X_T) + Lambda' Y_T
          + int_t^T Tr(Gamma_bar X_s) + Lambda_bar' Y_s ds) | F_t].
    Gamma and Gamma_bar must be symmetric (plain transpose symmetry; complex
    entries are allowed and kept non-conjugated).
    """

    Lambda: np.ndarray
    Gamma: np.ndarray
    Lambda_bar: np.ndarray
    Gamma_bar: np.ndarray

    def __post_init__(self):
        for name in ("Lambda", "Lambda_bar"):
            v = np.atleast_1d(np.asarray(getattr(self, name)))
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        for name in ("Gamma", "Gamma_bar"):
            m = np.asarray(getattr(self, name))
            if np.abs(m - m.T).max() > 1e-12 * max(1.0, np.abs(m).max()):
                raise ValueError(f"{name} must be symmetric")
            m = 0.5 * (m + m.T)
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def is_complex(self) -> bool:
        return any(np.iscomplexobj(a) for a in
                   (self.Lambda, self.Gamma, self.Lambda_bar, self.Gamma_bar))

    @staticmethod
    def zeros(p: int, d: int, complex_: bool = False) -> "LaplaceQuery":
        dt = complex if complex_ else float
        return LaplaceQuery(np.zeros(p, dt), np.zeros((d, d), dt),
                            np.zeros(p, dt), np.zeros((d, d), dt))


def lambda_closed_form(t, Lambda, Lambda_bar, kappa):
    """lambda_i(t) = Lambda_i e^{-kappa_i t} + Lambda_bar_i zeta_i(t).

    zeta_i(t) = (1 - e^{-kappa_i t}) / kappa_i, continuous at kappa_i = 0
    where it equals t. Exact; no ODE solve. ``t`` scalar or array (axis
    prepended).
    """
    kappa = np.asarray(kappa, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    z = -np.multiply.outer(t_arr, kappa)
    out = np.asarray(Lambda) * np.exp(z) \
        + np.asarray(Lambda_bar) * t_arr[..., None] * _phi1(z)
    return out if t_arr.ndim else out.reshape(kappa.shape)


@dataclass
class RiccatiSolution:
    """Trajectory of (lambda, g, eta) on the accepted integration grid."""

    query: LaplaceQuery
    kappa: np.ndarray
    d: int
    grid: np.ndarray
    _ys: np.ndarray
    _fs: np.ndarray
    blew_up: bool
    blow_time: float | None

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def _check(self, t: float):
        if t < -1e-12 or t > self.horizon + 1e-12:
            if self.blew_up:
                raise BlowUpError(
                    f"transform ODE blew up near t = {self.horizon:.6g}; "
                    f"cannot evaluate at {t:.6g}", self.horizon)
            raise RangeError(f"t = {t:.6g} outside solved range "
                             f"[0, {self.horizon:.6g}]")

    def lam(self, t):
        return lambda_closed_form(t, self.query.Lambda,
                                  self.query.Lambda_bar, self.kappa)

    def g(self, t: float) -> np.ndarray:
        self._check(t)
        z = _hermite_eval(self.grid, self._ys, self._fs, t)
        gm = z[:-1].reshape(self.d, self.d)
        return 0.5 * (gm + gm.T)

    def eta(self, t: float):
        self._check(t)
        return _hermite_eval(self.grid, self._ys, self._fs, t)[-1]

    def g_eta(self, t: float):
        self._check(t)
        z = _hermite_eval(self.grid, self._ys, self._fs, t)
        gm = z[:-1].reshape(self.d, self.d)
        return 0.5 * (gm + gm.T), z[-1]


def _mrde_rhs_factory(query: LaplaceQuery, params: ModelParams):
    d = params.d
    eps = params.epsilon
    i_n = params.i_n
    in_rho = i_n @ params.rho
    cmat = params.c
    kth = params.kappa * params.theta
    omega_eff = params.omega + eps**2 * (d - 1) * i_n
    gbar = query.Gamma_bar

    def rhs(t, z):
        g = z[:-1].reshape(d, d)
        lam = lambda_closed_form(t, query.Lambda, query.Lambda_bar,
                                 params.kappa)
        cl = cmat.T @ lam
        m = params.b + 0.5 * eps * np.outer(in_rho, cl)
        dg = 2.0 * eps**2 * (g @ i_n @ g) + g @ m + m.T @ g \
            + 0.5 * np.outer(cl, cl) + gbar
        deta = lam @ kth + np.trace(g @ omega_eff)
        return np.concatenate([dg.ravel(), [deta]])

    return rhs


def solve_mrde(query: LaplaceQuery, params: ModelParams, horizon: float,
               tol: float = 1e-9) -> RiccatiSolution:
    """Integrate the quadratic (g, eta) system from 0 to ``horizon``.

    Adaptive embedded Runge-Kutta 5(4); the symmetric part of g is
    re-projected after every accepted step, and a blow-up is recorded
    (not raised) when ||g||_F exceeds BLOW_UP_THRESHOLD or the step size
    underflows; the returned solution then carries the detected time.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    d = params.d
    dtype = complex if query.is_complex else float
    y0 = np.concatenate([np.asarray(query.Gamma, dtype).ravel(),
                         np.zeros(1, dtype)])

    def project(z):
        g = z[:-1].reshape(d, d)
        g = 0.5 * (g + g.T)
        return np.concatenate([g.ravel(), z[-1:]])

    def gnorm(z):
        return float(np.linalg.norm(z[:-1]))

    rhs = _mrde_rhs_factory(query, params)
    ts, ys, fs, blew, t_end = _rk45(rhs, 0.0, horizon, y0,
                                    rtol=tol, atol=tol * 1e-3,
                                    post=project, blow_norm=gnorm)
    return RiccatiSolution(query=query, kappa=params.kappa, d=d, grid=ts,
                           _ys=ys, _fs=fs, blew_up=blew,
                           blow_time=t_end if blew else None)


def laplace_transform(t: float, T: float, query: LaplaceQuery,
                      params: ModelParams, x: np.ndarray, y: np.ndarray,
                      tol: float = 1e-9):
    """E[exp(Gamma.X_T + Lambda.Y_T + running weights) | X_t = x, Y_t = y]."""
    if T < t:
        raise ValueError("need t <= T")
    if T == t:
        return np.exp(np.trace(query.Gamma @ x) + query.Lambda @ y)
    sol = solve_mrde(query, params, T - t, tol=tol)
    if sol.blew_up:
        raise BlowUpError(
            f"transform ODE blew up at t = {sol.blow_time:.6g} "
            f"before horizon {T - t:.6g}", sol.blow_time)
    g, eta = sol.g_eta(T - t)
    lam = sol.lam(T - t)
    return np.exp(eta + np.trace(g @ x) + lam @ y)


# ---------------------------------------------------------------------------
# Zero-coupon bonds.
# ---------------------------------------------------------------------------

@dataclass
class BondCoeffs:
    """Bond reconstruction coefficients A, B, D on [0, horizon].

    P(t, t + tau) = exp(A(tau) + Tr(D(tau) X_t) + B(tau)' Y_t).
    ``neg_d_psd_ok`` records whether -D stayed PSD on the grid; this is
    guaranteed only when the parameter validation's bond condition holds.
    """

    params: ModelParams
    sol: RiccatiSolution
    neg_d_psd_ok: bool

    @property
    def horizon(self) -> float:
        return self.sol.horizon

    def A(self, tau: float) -> float:
        return float(self.sol.eta(tau).real) - self.params.phi * tau

    def B(self, tau):
        return lambda_closed_form(tau, np.zeros(self.params.p),
                                  -np.ones(self.params.p), self.params.kappa)

    def D(self, tau: float) -> np.ndarray:
        return self.sol.g(tau).real

    def abd(self, tau: float):
        g, eta = self.sol.g_eta(tau)
        return (float(eta.real) - self.params.phi * tau, self.B(tau), g.real)

    def zc(self, tau: float, x: np.ndarray, y: np.ndarray) -> float:
        a, bv, dm = self.abd(tau)
        return float(np.exp(a + np.trace(dm @ x) + bv @ y))


def bond_coeffs(params: ModelParams, horizon: float,
                tol: float = 1e-10) -> BondCoeffs:
    """Solve the bond system (terminal weights zero, running -1, -gamma)."""
    p, d = params.p, params.d
    query = LaplaceQuery(np.zeros(p), np.zeros((d, d)),
                         -np.ones(p), -params.gamma)
    sol = solve_mrde(query, params, horizon, tol=tol)
    if sol.blew_up:
        raise BlowUpError(
            "bond coefficients blow up before the requested horizon; "
            f"maximal safe horizon ~ {sol.blow_time:.6g}", sol.blow_time)
    neg_d_ok = all(is_psd(-sol.g(tg).real) for tg in sol.grid)
    if validate_params(params).bond_condition_ok and not neg_d_ok:
        raise RuntimeError(
            "-D(tau) lost positive semidefiniteness although the bond "
            "condition holds; integration is inconsistent")
    return BondCoeffs(params=params, sol=sol, neg_d_psd_ok=neg_d_ok)


def zc_price(t: float, T: float, x: np.ndarray, y: np.ndarray,
             coeffs: BondCoeffs) -> float:
    """P(t, T) = exp(A + Tr(D x) + B'y) for tau = T - t within the grid."""
    tau = T - t
    if tau < 0 or tau > coeffs.horizon + 1e-12:
        raise RangeError(f"tau = {tau:.6g} outside the solved horizon "
                         f"{coeffs.horizon:.6g}")
    if tau == 0:
        return 1.0
    return coeffs.zc(tau, x, y)


# ---------------------------------------------------------------------------
# Forward-measure transform.
# ---------------------------------------------------------------------------

def forward_laplace(t: float, T: float, U: float, Lambda, Gamma,
                    params: ModelParams, x: np.ndarray, y: np.ndarray,
                    bond: BondCoeffs | None = None,
                    method: str = "composition", tol: float = 1e-10):
    """E^{Q_U}[exp(Tr(Gamma X_T) + Lambda' Y_T) | X_t = x, Y_t = y].

    Two equivalent evaluation paths are exposed:

    * ``composition``: transform with terminal weights shifted by the bond
      coefficients at U - T, then divided by the bond transform between
      T - t and U - t. Two plain solves.
    * ``direct``: integrate the transform system under the U-forward
      dynamics, whose drift picks up the time-dependent bond coefficients.

    Real queries must satisfy |Lambda_i| <= e^{-kappa_i (U-T)} / kappa_i and
    -Gamma PSD, the sufficient conditions for a finite forward expectation.
    """
    if not t <= T <= U:
        raise ValueError("need t <= T <= U")
    Lambda = np.atleast_1d(np.asarray(Lambda))
    Gamma = np.asarray(Gamma)
    is_cplx = np.iscomplexobj(Lambda) or np.iscomplexobj(Gamma)
    if not is_cplx:
        kap = params.kappa
        bound = np.where(kap > 0, np.exp(-kap * (U - T)) / np.where(
            kap > 0, kap, 1.0), np.inf)
        if np.any(np.abs(Lambda) > bound * (1 + 1e-12)):
            raise ValueError("real query violates |Lambda_i| <= "
                             "e^{-kappa_i (U-T)}/kappa_i")
        if not is_psd(-Gamma):
            raise ValueError("real query requires -Gamma PSD")
    if bond is None:
        bond = bond_coeffs(params, U - t, tol=min(tol, 1e-10))
    if bond.horizon < U - t - 1e-12:
        raise RangeError("bond coefficients cover less than U - t")
    if T == t:
        return np.exp(np.trace(Gamma @ x) + Lambda @ y)

    a_ut, b_ut, d_ut = bond.abd(U - T)

    if method == "composition":
        dtype = complex if is_cplx else float
        query = LaplaceQuery(Lambda.astype(dtype) + b_ut,
                             Gamma.astype(dtype) + d_ut,
                             -np.ones(params.p), -params.gamma)
        sol = solve_mrde(query, params, T - t, tol=tol)
        if sol.blew_up:
            raise BlowUpError("forward transform blew up at "
                              f"{sol.blow_time:.6g}", sol.blow_time)
        g_t, eta_t = sol.g_eta(T - t)
        a_tl = eta_t - params.phi * (T - t)
        b_tl = sol.lam(T - t)
        a_full, b_full, d_full = bond.abd(U - t)
        a_u = a_tl + a_ut - a_full
        b_u = b_tl + b_ut - b_full
        d_u = g_t + d_ut - d_full
    elif method == "direct":
        a_u, b_u, d_u = _forward_direct(t, T, U, Lambda, Gamma, params,
                                        bond, tol)
    else:
        raise ValueError("method must be 'composition' or 'direct'")
    return np.exp(a_u + np.trace(d_u @ x) + b_u @ y)


def _forward_direct(t, T, U, Lambda, Gamma, params, bond, tol):
    """Integrate the U-forward transform system directly.

    State runs in tau = T - t' from 0 (terminal) to T - t; the drift
    involves the bond coefficients at U - T + tau.
    """
    d = params.d
    eps = params.epsilon
    i_n = params.i_n
    in_rho = i_n @ params.rho
    cmat = params.c
    kap = params.kappa
    kth = params.kappa * params.theta
    omega_eff = params.omega + eps**2 * (d - 1) * i_n
    is_cplx = np.iscomplexobj(Lambda) or np.iscomplexobj(Gamma)
    dtype = complex if is_cplx else float

    def rhs(tau, z):
        n = z[:-1].reshape(d, d)
        bu = np.exp(-kap * tau) * Lambda
        b_bond = bond.B(U - T + tau)
        d_bond = bond.D(U - T + tau)
        cbu = cmat.T @ bu
        cbb = cmat.T @ b_bond
        m = params.b + 2.0 * eps**2 * (i_n @ d_bond) \
            + eps * np.outer(in_rho, cbb) + 0.5 * eps * np.outer(in_rho, cbu)
        cross = np.outer(cbb, cbu)
        rho_term = d_bond @ np.outer(in_rho, cbu)
        dn = 2.0 * eps**2 * (n @ i_n @ n) + n @ m + m.T @ n \
            + 0.5 * np.outer(cbu, cbu) + 0.5 * (cross + cross.T) \
            + eps * (rho_term + rho_term.T)
        da = bu @ kth + np.trace(n @ omega_eff)
        return np.concatenate([dn.ravel(), [da]])

    y0 = np.concatenate([np.asarray(Gamma, dtype).ravel(), np.zeros(1, dtype)])

    def project(z):
        n = z[:-1].reshape(d, d)
        n = 0.5 * (n + n.T)
        return np.concatenate([n.ravel(), z[-1:]])

    ts, ys, fs, blew, t_end = _rk45(rhs, 0.0, T - t, y0, rtol=tol,
                                    atol=tol * 1e-3, post=project,
                                    blow_norm=lambda z: float(
                                        np.linalg.norm(z[:-1])))
    if blew:
        raise BlowUpError(f"forward transform blew up at {t_end:.6g}", t_end)
    z = _hermite_eval(ts, ys, fs, T - t)
    n = z[:-1].reshape(d, d)
    b_u = np.exp(-kap * (T - t)) * Lambda
    return z[-1], b_u, 0.5 * (n + n.T)


# ---------------------------------------------------------------------------
# Non-explosion certificates.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonExplosionCertificate:
    """Sufficient-condition certificate for global existence of the MRDE.

    ``mode`` is "zero-candidate" (Upsilon = 0), "scaled-identity"
    (Upsilon = mu/(4 eps^2) I with mu the spectral gap of -(b+b')), or
    "none" when neither certificate holds. holds = False does not imply
    explosion; the solver still detects blow-up numerically.
    """

    upsilon: np.ndarray | None
    holds: bool
    mode: str
    messages: tuple[str, ...] = ()


def check_non_explosion(query: LaplaceQuery, params: ModelParams,
                        horizon: float) -> NonExplosionCertificate:
    """Try the two sufficient certificates for a real query."""
    if query.is_complex:
        raise ValueError("certificates apply to real queries only")
    d = params.d
    eps = params.epsilon
    cc = params.c.T @ params.c

    if eps == 0.0:
        return NonExplosionCertificate(
            np.zeros((d, d)), True, "scaled-identity",
            ("epsilon = 0: the transform equation is linear and never "
             "explodes",))

    # Upsilon = 0: -Gamma PSD plus the uniform-in-time bound on lambda.
    lam_sup2 = np.where(
        params.kappa > 0,
        np.maximum(query.Lambda**2,
                   (query.Lambda_bar / np.where(params.kappa > 0,
                                                params.kappa, 1.0))**2),
        np.where(query.Lambda_bar == 0.0, query.Lambda**2, np.inf))
    if np.all(np.isfinite(lam_sup2)):
        cond = -query.Gamma_bar - 0.5 * float(np.sum(lam_sup2)) * cc
        if is_psd(-query.Gamma) and is_psd(cond):
            return NonExplosionCertificate(np.zeros((d, d)), True,
                                           "zero-candidate")

    # Upsilon = mu/(4 eps^2) I with mu the smallest eigenvalue of -(b+b').
    mu = float(np.linalg.eigvalsh(-(params.b + params.b.T)).min())
    msgs = []
    if mu > 0:
        ups = mu / (4.0 * eps**2) * np.eye(d)
        if is_psd(ups - query.Gamma):
            i_n = params.i_n
            in_rho = i_n @ params.rho
            ok = True
            for tg in np.linspace(0.0, horizon, CERT_GRID):
                lam = lambda_closed_form(tg, query.Lambda, query.Lambda_bar,
                                         params.kappa)
                cl = params.c.T @ lam
                m = params.b + 0.5 * eps * np.outer(in_rho, cl)
                brack = 2.0 * eps**2 * ups @ i_n @ ups + ups @ m + m.T @ ups \
                    + 0.5 * np.outer(cl, cl) + query.Gamma_bar
                if not is_psd(-brack):
                    ok = False
                    break
            if ok:
                return NonExplosionCertificate(ups, True, "scaled-identity")
            msgs.append("scaled-identity bracket loses PSD on the grid")
        else:
            msgs.append("Upsilon - Gamma not PSD in scaled-identity mode")
    else:
        msgs.append("-(b + b') not positive definite; scaled-identity "
                    "candidate unavailable")
    return NonExplosionCertificate(None, False, "none", tuple(msgs))
