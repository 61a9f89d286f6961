"""Model parameters, structural checks and solvability diagnostics.

The model state is a pair (X, Y): Y is a p-vector of mean-reverting yield
curve factors and X is a d x d positive semidefinite matrix driving their
instantaneous covariance c X c'. The short rate is
``r = phi + sum(Y) + Tr(gamma X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: relative tolerance for all positive-semidefiniteness tests
TOL_PSD = 1e-10

#: minimal relative gap between consecutive mean-reversion speeds
KAPPA_GAP = 1e-8


class StructuralError(ValueError):
    """Raised when parameter containers are malformed (shapes, symmetry)."""


def sym_check(m: np.ndarray, name: str, tol: float = 1e-12) -> np.ndarray:
    """Return the symmetrized matrix, rejecting asymmetry beyond tolerance."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructuralError(f"{name} must be a square matrix, got {m.shape}")
    scale = max(1.0, np.abs(m).max())
    if np.abs(m - m.T).max() > tol * scale:
        raise StructuralError(f"{name} is not symmetric within tolerance")
    return 0.5 * (m + m.T)


def min_rel_eig(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix, relative to its largest."""
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    scale = max(np.abs(w).max(), 1e-300)
    return float(w.min() / scale)


def is_psd(m: np.ndarray, tol: float = TOL_PSD) -> bool:
    """PSD test via eigenvalues, with a tolerance relative to the spectrum."""
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    scale = max(np.abs(w).max(), 1e-300)
    return bool(w.min() >= -tol * scale)


@dataclass(frozen=True)
class Dimensions:
    """Problem sizes: p factors, d x d covariance driver, noise rank n."""

    p: int
    d: int
    n: int

    def __post_init__(self):
        if self.p < 1 or self.d < 1:
            raise StructuralError("p and d must be positive integers")
        if not 0 <= self.n <= self.d:
            raise StructuralError("n must satisfy 0 <= n <= d")

    @property
    def i_n(self) -> np.ndarray:
        """The d x d projector with ones on the first n diagonal entries."""
        m = np.zeros((self.d, self.d))
        m[: self.n, : self.n] = np.eye(self.n)
        return m


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set of the stochastic variance-covariance model.

    Parameters
    ----------
    dims : Dimensions
    kappa : (p,) mean-reversion speeds of the factors, diagonal convention.
    theta : (p,) long-run factor means.
    y0 : (p,) initial factor values.
    x0 : (d, d) initial covariance driver, PSD.
    omega : (d, d) constant drift of X, PSD for well-posedness.
    b : (d, d) mean-reversion matrix of X.
    epsilon : vol-of-vol scale, >= 0.
    c : (p, d) factor loading of X onto the factor covariance.
    rho : (d,) correlation vector between X noise and factor noise;
        only the first n components act, the rest are zeroed.
    gamma : (d, d) symmetric loading of X in the short rate.
    phi : short-rate constant.
    enforce_kappa_convention : when True (default) kappa must be strictly
        positive and strictly increasing; diagnostic configurations
        (e.g. weak-error studies with kappa = 0) may disable it.
    """

    dims: Dimensions
    kappa: np.ndarray
    theta: np.ndarray
    y0: np.ndarray
    x0: np.ndarray
    omega: np.ndarray
    b: np.ndarray
    epsilon: float
    c: np.ndarray
    rho: np.ndarray
    gamma: np.ndarray
    phi: float
    enforce_kappa_convention: bool = field(default=True, repr=False)

    def __post_init__(self):
        p, d, n = self.dims.p, self.dims.d, self.dims.n

        def vec(a, name, size):
            a = np.asarray(a, dtype=float).reshape(-1)
            if a.size != size:
                raise StructuralError(f"{name} must have length {size}")
            a.setflags(write=False)
            return a

        object.__setattr__(self, "kappa", vec(self.kappa, "kappa", p))
        object.__setattr__(self, "theta", vec(self.theta, "theta", p))
        object.__setattr__(self, "y0", vec(self.y0, "y0", p))

        for name, size in (("x0", d), ("omega", d), ("b", d), ("gamma", d)):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (size, size):
                raise StructuralError(f"{name} must be {size}x{size}")
            if name != "b":
                m = sym_check(m, name)
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, name, m)

        cmat = np.asarray(self.c, dtype=float)
        if cmat.shape != (p, d):
            raise StructuralError(f"c must be {p}x{d}, got {cmat.shape}")
        cmat = cmat.copy()
        cmat.setflags(write=False)
        object.__setattr__(self, "c", cmat)

        rho = np.asarray(self.rho, dtype=float).reshape(-1).copy()
        if rho.size != d:
            raise StructuralError(f"rho must have length {d}")
        rho[n:] = 0.0  # only the first n components of rho act on the model
        if rho @ rho > 1.0 + 1e-12:
            raise StructuralError("|rho|^2 exceeds 1")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

        if self.epsilon < 0:
            raise StructuralError("epsilon must be nonnegative")

        if self.enforce_kappa_convention:
            if np.any(self.kappa <= 0):
                raise StructuralError("kappa entries must be strictly positive")
            gaps = np.diff(self.kappa)
            if np.any(gaps <= KAPPA_GAP * np.abs(self.kappa[1:])):
                raise StructuralError(
                    "kappa entries must be strictly increasing "
                    f"(relative gap >= {KAPPA_GAP:g})")
        elif np.any(self.kappa < 0):
            raise StructuralError("kappa entries must be nonnegative")

    @property
    def p(self) -> int:
        return self.dims.p

    @property
    def d(self) -> int:
        return self.dims.d

    @property
    def n(self) -> int:
        return self.dims.n

    @property
    def rho_bar(self) -> float:
        """sqrt(1 - |rho|^2), the weight of the independent factor noise."""
        return float(np.sqrt(max(0.0, 1.0 - self.rho @ self.rho)))

    @property
    def i_n(self) -> np.ndarray:
        return self.dims.i_n

    def short_rate(self, x: np.ndarray, y: np.ndarray) -> float:
        """r = phi + sum(Y) + Tr(gamma X)."""
        return float(self.phi + np.sum(y) + np.trace(self.gamma @ x))


@dataclass(frozen=True)
class ValidationReport:
    """Solvability diagnostics for a parameter set.

    ``weak_solution_ok``  : x0 and omega PSD, so the SDE has a weak solution.
    ``strong_solution_ok``: omega - 2 eps^2 I_n PSD and x0 positive definite.
    ``bond_condition_ok`` : gamma - (sum 1/kappa_i^2)/2 c'c PSD, the sufficient
                            condition under which zero-coupon bonds are finite
                            for every maturity.
    ``stationarity_ok``   : -(b + b') positive definite, so (X, Y) admits a
                            stationary law.
    """

    weak_solution_ok: bool
    strong_solution_ok: bool
    bond_condition_ok: bool
    stationarity_ok: bool
    messages: tuple[str, ...]

    @property
    def ok(self) -> bool:
        """True when a weak solution exists (minimal requirement to price)."""
        return self.weak_solution_ok


def validate_params(params: ModelParams) -> ValidationReport:
    """Run the matrix-inequality diagnostics on a parameter set.

    All tests are eigenvalue based with relative tolerance ``TOL_PSD``.
    The function is pure; it never mutates or rejects the parameters.
    """
    msgs = []
    i_n = params.i_n

    weak = is_psd(params.x0) and is_psd(params.omega)
    if not weak:
        msgs.append("x0 or omega is not PSD: the SDE has no weak solution")

    strong = weak and is_psd(params.omega - 2.0 * params.epsilon**2 * i_n) \
        and min_rel_eig(params.x0) > TOL_PSD
    if weak and not strong:
        msgs.append("weak solution only: omega - 2 eps^2 I_n not PSD "
                    "or x0 singular")

    if np.any(params.kappa <= 0):
        bond = False
        msgs.append("bond condition not evaluable with kappa = 0 entries")
    else:
        inv_k2 = float(np.sum(1.0 / params.kappa**2))
        bond = is_psd(params.gamma - 0.5 * inv_k2 * params.c.T @ params.c)
        if not bond:
            msgs.append(
                "gamma - (sum 1/kappa_i^2)/2 c'c is not PSD: bond prices are "
                "not certified for all maturities (small-epsilon regimes may "
                "still be fine; rely on blow-up detection)")

    stat = min_rel_eig(-(params.b + params.b.T)) > TOL_PSD
    if not stat:
        msgs.append("-(b + b') is not positive definite: no stationarity "
                    "certificate")

    return ValidationReport(weak_solution_ok=weak, strong_solution_ok=strong,
                            bond_condition_ok=bond, stationarity_ok=stat,
                            messages=tuple(msgs))
