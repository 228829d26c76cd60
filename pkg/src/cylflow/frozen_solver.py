"""Frozen-coefficient linear problem (the map Psi) and bounded-solution ODEs.

Given a frozen path ``(sigma0, xi0)`` the unknown ``xi`` is expanded at each
time in the Hermite basis orthogonal at ``a0(tau)``.  Its coefficients obey

    c_t = -kappa a0 c + s,      s = -N(a0, xi0) - (a0_t / 2 a0) K c0,

mode by mode (``K`` is the dilation generator from
:mod:`cylflow.modulation`).  Modes with ``kappa > 0`` are integrated forward
with an exponential integrator; the ``kappa = -1`` axial-translation modes
(``beta``) and the ``kappa = 0`` quadratic modes (``gamma``) are fixed by the
bounded-solution choice, integrating backward from infinity; the symmetry
modes stay zero and their equations determine ``sigma_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from .errors import AdmissibilityError, DomainError, PreconditionError, ShapeError
from .modulation import (
    K,
    ModulationVector,
    SymmetryParams,
    _slots,
    dilation_generator,
    orthogonality_residual_coeffs,
    s00,
)
from .spectral_operator import kappa_lattice, sq_norm_quadratic, sq_norm_y
from .weighted_space import (
    SpectralField,
    pivot_weight,
    rebase,
    rebase_batch,
    sobolev_sq_coeffs,
)

DEFAULT_DT = 0.01
DEFAULT_TAU_MAX = 40.0


def tau_grid(tau_max: float = DEFAULT_TAU_MAX, dt: float = DEFAULT_DT) -> np.ndarray:
    if not (tau_max > 0 and dt > 0):
        raise DomainError("tau_max and dt must be positive")
    n = int(round(tau_max / dt))
    if not math.isclose(n * dt, tau_max, rel_tol=1e-9):
        raise DomainError(f"tau_max = {tau_max} is not a multiple of dt = {dt}")
    return np.linspace(0.0, tau_max, n + 1)


def japanese(t):
    """``<t> = (1 + t^2)^{1/2}``."""
    return np.sqrt(1.0 + np.asarray(t, dtype=float) ** 2)


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectionCoeffs:
    """``(beta_i, gamma_ij)``; ``gamma`` is symmetric and only ``i <= j`` enter the correction."""

    beta: np.ndarray
    gamma: np.ndarray

    @classmethod
    def zero(cls, n_axis: int = 1) -> "CorrectionCoeffs":
        return cls(np.zeros(n_axis), np.zeros((n_axis, n_axis)))

    def as_vector(self) -> np.ndarray:
        iu = np.triu_indices(len(self.beta))
        return np.concatenate([self.beta, self.gamma[iu]])


@dataclass(frozen=True, eq=False)
class FlowPath:
    """Time samples of ``(sigma, sigma_t, xi)``.

    ``xi`` holds coefficients with one leading time axis in basis weight
    ``basis_weight``.  ``frame_a`` is the weight whose modes ``xi`` is kept
    orthogonal to (the frozen ``a0`` for solver output); ``lam`` is the
    integrating factor ``exp(-int_0^tau a)`` that divides ``z`` in ``W``.
    """

    taus: np.ndarray
    a: np.ndarray
    z: np.ndarray          # (M+1, k+1)
    g: np.ndarray          # (M+1, k+1, n_axis)
    da: np.ndarray
    dz: np.ndarray
    dg: np.ndarray
    xi: np.ndarray
    basis_weight: float = 0.5
    xi_dot: np.ndarray | None = None
    lam: np.ndarray | None = None
    frame_a: np.ndarray | None = None
    beta_path: np.ndarray | None = None     # (M+1, n_axis)
    gamma_path: np.ndarray | None = None    # (M+1, n_axis, n_axis)

    def __post_init__(self):
        M1 = len(self.taus)
        if np.any(np.diff(self.taus) <= 0):
            raise DomainError("tau grid must be strictly increasing")
        for name in ("a", "da"):
            if np.shape(getattr(self, name)) != (M1,):
                raise ShapeError(f"{name} must have one entry per node")
        if self.xi.shape[0] != M1:
            raise ShapeError("xi must have one field per node")
        if self.lam is None:
            object.__setattr__(self, "lam", np.exp(-integrate.cumulative_trapezoid(
                self.a, self.taus, initial=0.0)))
        if self.frame_a is None:
            object.__setattr__(self, "frame_a", np.asarray(self.a, dtype=float))

    @property
    def n_axis(self) -> int:
        return self.g.shape[-1]

    @property
    def trunc(self) -> tuple[int, int]:
        return self.xi.shape[1] - 1, (self.xi.shape[-1] - 1) // 2

    def __len__(self):
        return len(self.taus)

    def sigma(self, i: int) -> SymmetryParams:
        return SymmetryParams(self.g[i], self.z[i], self.a[i])

    def sigma_dot(self, i: int) -> ModulationVector:
        return ModulationVector(self.dg[i], self.dz[i], self.da[i])

    def xi_field(self, i: int) -> SpectralField:
        return SpectralField(self.xi[i], self.basis_weight)

    def sigma_matrix(self) -> np.ndarray:
        """Rows ``(g_tilt flattened, z, a)`` per node."""
        M1 = len(self.taus)
        return np.concatenate([self.g.reshape(M1, -1), self.z, self.a[:, None]], axis=1)

    def sigma_dot_matrix(self) -> np.ndarray:
        M1 = len(self.taus)
        return np.concatenate([self.dg.reshape(M1, -1), self.dz, self.da[:, None]], axis=1)

    @classmethod
    def static(cls, sigma0: SymmetryParams, taus: np.ndarray, trunc=(24, 8),
               basis_weight: float = 0.5) -> "FlowPath":
        taus = np.asarray(taus, dtype=float)
        M1 = len(taus)
        n = sigma0.n_axis
        N, M = trunc
        return cls(
            taus=taus,
            a=np.full(M1, sigma0.a),
            z=np.tile(sigma0.z, (M1, 1)),
            g=np.tile(sigma0.g_tilt, (M1, 1, 1)),
            da=np.zeros(M1),
            dz=np.zeros((M1, K + 1)),
            dg=np.zeros((M1, K + 1, n)),
            xi=np.zeros((M1,) + (N + 1,) * n + (2 * M + 1,)),
            basis_weight=basis_weight,
            xi_dot=np.zeros((M1,) + (N + 1,) * n + (2 * M + 1,)),
        )


@dataclass(frozen=True, eq=False)
class FrozenProblem:
    """Frozen path, initial datum and (optionally) prescribed corrections.

    With ``beta``/``gamma`` left as ``None`` the bounded-solution choice is
    made (the values that make those modes decay); otherwise the given
    values are used as initial data and integrated forward.
    """

    base: FlowPath
    eta0: SpectralField
    beta: CorrectionCoeffs | None = None
    gamma: CorrectionCoeffs | None = None
    delta: float = 0.01
    s_tol: float = 1e-10

    def __post_init__(self):
        a0 = float(self.base.a[0])
        if a0 < 0.5 + 2 * self.delta - 1e-12:
            raise PreconditionError(f"a0 = {a0} below 1/2 + 2 delta = {0.5 + 2 * self.delta}")
        if self.eta0.trunc != self.base.trunc or self.eta0.n_axis != self.base.n_axis:
            raise ShapeError("eta0 and the base path have different truncations")
        c = rebase(self.eta0, a0).coeffs
        kap = kappa_lattice(self.eta0.trunc, self.eta0.n_axis)
        bad = np.abs(c[kap <= 0])
        scale = max(np.abs(c).max(), 1e-300)
        if bad.size and bad.max() > self.s_tol * scale and bad.max() > 1e-14:
            raise PreconditionError("eta0 has a component on a zero or unstable mode")


@dataclass(frozen=True, eq=False)
class FrozenSolution:
    path: FlowPath
    coeffs: CorrectionCoeffs
    tail_budget: float


# ---------------------------------------------------------------------------
# scalar bounded-solution problems
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _phi12(z: np.ndarray):
    """``phi1 = (1-e^-z)/z`` and ``phi2 = (z-1+e^-z)/z^2`` with small-z series."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(-zs)
    p1 = np.where(small, 1 - z / 2 + z * z / 6 - z**3 / 24, -em1 / zs)
    p2 = np.where(small, 0.5 - z / 6 + z * z / 24 - z**3 / 120, (zs + em1) / (zs * zs))
    return p1, p2


def fit_power_tail(taus: np.ndarray, f: np.ndarray, frac: float = 0.1, min_pts: int = 10):
    """Fit ``|f| ~ A tau^{-p}`` on the last window; returns ``(sign, A, p)``.

    ``A = 0`` when the window is identically zero.
    """
    n = max(min_pts, int(frac * len(taus)))
    t = taus[-n:]
    y = np.abs(f[-n:])
    keep = (y > 0) & (t > 0)
    if keep.sum() < 2:
        return 0.0, 0.0, np.inf
    slope, icpt = np.polyfit(np.log(t[keep]), np.log(y[keep]), 1)
    return float(np.sign(f[-1]) or 1.0), float(math.exp(icpt)), float(-slope)


ROUNDOFF_FLOOR = 64 * np.finfo(float).eps   # sources are O(1) sums cancelling to zero


def _negligible_tail(f: np.ndarray, frac: float = 0.1, min_pts: int = 10, rel: float = 1e-12) -> bool:
    """True when the tail window sits at roundoff level."""
    n = max(min_pts, int(frac * len(f)))
    peak = float(np.max(np.abs(f)))
    return float(np.max(np.abs(f[-n:]))) <= max(rel * peak, ROUNDOFF_FLOOR)


def _as_callable(x):
    return x if callable(x) else None


def ode_bounded_solve(a_path, f_path, taus: np.ndarray | None = None, return_info: bool = False):
    """Bounded solution of ``x_t - a x = f`` on ``[0, inf)``.

    ``x(tau) = -int_tau^inf f(t) exp(-int_tau^t a) dt`` and ``x0 = x(0)``.

    ``a_path`` and ``f_path`` are either arrays sampled on ``taus`` or
    callables.  Arrays are treated as piecewise linear (``f``) and
    piecewise constant per step (``a``, step means), for which the
    backward exponential-integrator recursion is exact; beyond the last
    node ``a`` is held at its final value and ``f`` follows a fitted power
    law.  Callables are integrated with 8-point Gauss-Legendre per step and
    adaptive quadrature for the tail.
    """
    if taus is None:
        taus = tau_grid()
    taus = np.asarray(taus, dtype=float)
    h = np.diff(taus)
    fa, ff = _as_callable(a_path), _as_callable(f_path)
    if fa is not None and ff is not None:
        x, tail = _bounded_callable(fa, ff, taus)
    else:
        a = fa(taus) if fa is not None else np.asarray(a_path, dtype=float)
        f = ff(taus) if ff is not None else np.asarray(f_path, dtype=float)
        a = np.broadcast_to(a, taus.shape).astype(float)
        if f.shape[0] != taus.shape[0]:
            raise ShapeError("f_path must have one entry per node")
        if np.any(a <= 0):
            raise DomainError("a_path must stay positive")
        x, tail = _bounded_arrays(a, f, taus, h)
    if return_info:
        return float(x[0]) if x.ndim == 1 else x[0], x, tail
    return (float(x[0]) if x.ndim == 1 else x[0]), x


def _bounded_arrays(a, f, taus, h):
    abar = 0.5 * (a[1:] + a[:-1])
    z = -abar * h
    p1, p2 = _phi12(z)
    f2 = f.reshape(len(taus), -1)
    ncol = f2.shape[1]
    xM = np.empty(ncol)
    budget = 0.0
    aM = a[-1]
    tM = taus[-1]
    for q in range(ncol):
        sgn, A, p = fit_power_tail(taus, f2[:, q])
        if A == 0.0:
            xM[q] = 0.0
            continue
        if p < 0 and _negligible_tail(f2[:, q]):
            # roundoff noise: hold the last value constant beyond the grid
            xM[q] = -f2[-1, q] / aM
            budget = max(budget, abs(xM[q]))
            continue
        if p < 0:
            raise DomainError(f"source grows in the tail (fitted exponent {-p:.3g}); not integrable")
        val, err = integrate.quad(lambda t: A * t ** (-p) * math.exp(-aM * (t - tM)), tM, np.inf,
                                  limit=200)
        xM[q] = -sgn * val
        budget = max(budget, abs(val))
    E_inv = np.exp(z)[:, None] * np.ones((1, ncol))
    P1 = (h * p1)[:, None] * np.ones((1, ncol))
    P2 = (h * p2)[:, None] * np.ones((1, ncol))
    x = kernels.etd_backward(xM, E_inv, P1, P2, f2)
    return x.reshape(f.shape), budget


def _bounded_callable(fa, ff, taus):
    t0 = taus[:-1]
    h = np.diff(taus)
    # outer nodes on each step and inner nodes on [t0, t_g]
    tg = t0[:, None] + 0.5 * h[:, None] * (1 + _GL_X[None, :])
    span = tg - t0[:, None]
    ti = t0[:, None, None] + 0.5 * span[:, :, None] * (1 + _GL_X[None, None, :])
    inner = 0.5 * span * np.sum(_GL_W * fa(ti), axis=-1)            # int_{t0}^{tg} a
    step_I = 0.5 * h * np.sum(_GL_W * ff(tg) * np.exp(-inner), axis=-1)
    tq = t0[:, None] + 0.5 * h[:, None] * (1 + _GL_X[None, :])
    A_step = 0.5 * h * np.sum(_GL_W * fa(tq), axis=-1)
    tM = taus[-1]

    def weight(t):
        return math.exp(-integrate.quad(fa, tM, t, limit=200)[0])

    tail = integrate.quad(lambda t: ff(t) * weight(t), tM, np.inf, limit=200)[0]
    x = np.empty(len(taus))
    x[-1] = -tail
    for i in range(len(taus) - 2, -1, -1):
        x[i] = math.exp(-A_step[i]) * x[i + 1] - step_I[i]
    return x, abs(tail)


def gamma_solve(h_path, taus: np.ndarray | None = None, return_info: bool = False):
    """``gamma(tau) = -int_tau^inf h``; returns ``(gamma(0), trajectory)``.

    Arrays use the trapezoid rule (exact for piecewise-linear data) plus a
    fitted power-law tail that must have exponent above 1; callables use
    Gauss-Legendre per step and adaptive quadrature for the tail.
    """
    if taus is None:
        taus = tau_grid()
    taus = np.asarray(taus, dtype=float)
    hstep = np.diff(taus)
    if callable(h_path):
        tg = taus[:-1, None] + 0.5 * hstep[:, None] * (1 + _GL_X[None, :])
        steps = 0.5 * hstep * np.sum(_GL_W * h_path(tg), axis=-1)
        tail = integrate.quad(h_path, taus[-1], np.inf, limit=200)[0]
        g = np.empty(len(taus))
        g[-1] = -tail
        g[:-1] = -tail - np.cumsum(steps[::-1])[::-1]
        budget = abs(tail)
    else:
        h = np.asarray(h_path, dtype=float)
        if h.shape[0] != len(taus):
            raise ShapeError("h_path must have one entry per node")
        h2 = h.reshape(len(taus), -1)
        tails = np.zeros(h2.shape[1])
        for q in range(h2.shape[1]):
            sgn, A, p = fit_power_tail(taus, h2[:, q])
            if A == 0.0:
                continue
            if p <= 1 and _negligible_tail(h2[:, q]):
                continue
            if p <= 1:
                raise DomainError(f"tail exponent {p:.3g} <= 1: source not integrable")
            tails[q] = sgn * A * taus[-1] ** (1 - p) / (p - 1)
        steps = 0.5 * hstep[:, None] * (h2[1:] + h2[:-1])
        g2 = np.empty_like(h2)
        g2[-1] = -tails
        g2[:-1] = -tails - np.cumsum(steps[::-1], axis=0)[::-1]
        g = g2.reshape(h.shape)
        budget = float(np.abs(tails).max()) if tails.size else 0.0
    g0 = float(g[0]) if np.ndim(g) == 1 else g[0]
    if return_info:
        return g0, g, budget
    return g0, g


# ---------------------------------------------------------------------------
# mode bookkeeping
# ---------------------------------------------------------------------------

def _beta_slots(n_axis):
    out = []
    for i in range(n_axis):
        e = [0] * n_axis
        e[i] = 1
        out.append(tuple(e) + (0,))
    return out


def _gamma_slots(n_axis):
    out = {}
    for i in range(n_axis):
        for j in range(i, n_axis):
            e = [0] * n_axis
            e[i] += 1
            e[j] += 1
            out[(i, j)] = tuple(e) + (0,)
    return out


def beta_scale(a, n_axis):
    """``beta_i = c * beta_scale`` for the a-basis coefficient ``c`` at ``e_i``."""
    return np.sqrt(a) * np.vectorize(lambda q: sq_norm_y(q, n_axis))(a)


def gamma_scale(a, i, j, n_axis):
    nq = np.vectorize(lambda q: sq_norm_quadratic(q, i, j, n_axis))(a)
    return nq / math.sqrt(2) if i == j else nq


def correction_field(coeffs: CorrectionCoeffs, a0: float, trunc, n_axis: int,
                     basis_weight: float = 0.5) -> SpectralField:
    """``sum_i beta_i Sigma10_i(a0) + sum_{i<=j} gamma_ij Sigma20_ij(a0)``."""
    N, M = trunc
    c = np.zeros((N + 1,) * n_axis + (2 * M + 1,))
    for i, sl in enumerate(_beta_slots(n_axis)):
        c[sl] = coeffs.beta[i] / float(beta_scale(a0, n_axis))
    for (i, j), sl in _gamma_slots(n_axis).items():
        c[sl] = coeffs.gamma[i, j] / float(gamma_scale(a0, i, j, n_axis))
    return rebase(SpectralField(c, a0), basis_weight)


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------

def frozen_sources(base: FlowPath) -> tuple[np.ndarray, np.ndarray]:
    """Source ``s`` in the a0-basis per node, and ``xi0`` in that basis."""
    from .nonlinearity import N_coeffs
    n = base.n_axis
    a0 = base.a
    c0 = rebase_batch(base.xi, base.basis_weight, a0, n)
    if np.any(base.xi):
        Nw = N_coeffs(a0, base.xi, base.basis_weight, n)
        Na = rebase_batch(Nw, base.basis_weight, a0, n)
    else:
        Na = np.zeros_like(c0)
    rate = (base.da / (2 * a0)).reshape((-1,) + (1,) * (n + 1))
    s = -Na - rate * dilation_generator(c0, n)
    return s, c0


def solve_frozen(p: FrozenProblem, chunk: int = 4096) -> FrozenSolution:
    """Solve the frozen problem; see the module docstring for the scheme."""
    base = p.base
    n = base.n_axis
    taus = base.taus
    h = np.diff(taus)
    a0 = base.a
    a_init = float(a0[0])
    trunc = base.trunc
    kap = kappa_lattice(trunc, n)
    shape = kap.shape
    s, _ = frozen_sources(base)
    M1 = len(taus)

    c_init = rebase(p.eta0, a_init).coeffs.copy()
    c = np.zeros((M1,) + shape)

    # stable modes: forward exponential integrator (chunked over components)
    stable = np.flatnonzero(kap.ravel() > 0)
    s_flat = s.reshape(M1, -1)
    c_flat = c.reshape(M1, -1)
    abar = 0.5 * (a0[1:] + a0[:-1])
    for start in range(0, len(stable), chunk):
        idx = stable[start:start + chunk]
        z = abar[:, None] * h[:, None] * kap.ravel()[idx][None, :]
        p1, p2 = _phi12(z)
        c_flat[:, idx] = kernels.etd_forward(c_init.ravel()[idx], np.exp(-z), h[:, None] * p1,
                                             h[:, None] * p2, s_flat[:, idx])

    # beta modes (kappa = -1) and gamma modes (kappa = 0)
    budget = 0.0
    bsl = _beta_slots(n)
    gsl = _gamma_slots(n)
    for i, sl in enumerate(bsl):
        if p.beta is None:
            _, traj, tb = ode_bounded_solve(a0, s[(slice(None),) + sl], taus, return_info=True)
            budget = max(budget, tb)
        else:
            z = -abar * h
            p1, p2 = _phi12(z)
            c0v = p.beta.beta[i] / float(beta_scale(a_init, n))
            traj = kernels.etd_forward(np.array([c0v]), np.exp(-z)[:, None], (h * p1)[:, None],
                                       (h * p2)[:, None], s[(slice(None),) + sl][:, None])[:, 0]
        c[(slice(None),) + sl] = traj
    for (i, j), sl in gsl.items():
        src = s[(slice(None),) + sl]
        if p.gamma is None:
            _, traj, tb = gamma_solve(src, taus, return_info=True)
            budget = max(budget, tb)
        else:
            g0 = p.gamma.gamma[i, j] / float(gamma_scale(a_init, i, j, n))
            traj = g0 + integrate.cumulative_trapezoid(src, taus, initial=0.0)
        c[(slice(None),) + sl] = traj

    # symmetry modes stay zero; their equations give sigma_t
    s0, s0l, sel = _slots(n, trunc[1])
    da = s[(slice(None),) + s0] / s00(a0)
    zeta = np.stack([s[(slice(None),) + s0l[l]] for l in range(2)], axis=1)
    dg = np.stack([np.stack([np.sqrt(a0) * s[(slice(None),) + sel[l][j]] for j in range(n)], axis=1)
                   for l in range(2)], axis=1)
    lam0 = np.exp(-integrate.cumulative_trapezoid(a0, taus, initial=0.0))
    dz = lam0[:, None] * zeta

    a_new = a_init + integrate.cumulative_trapezoid(da, taus, initial=0.0)
    viol = np.flatnonzero(np.abs(a_new - a_init) > p.delta)
    if viol.size:
        t_bad = float(taus[viol[0]])
        raise AdmissibilityError(f"a left [a0 - delta, a0 + delta] at tau = {t_bad:g}", tau=t_bad)
    z_new = base.z[0] + integrate.cumulative_trapezoid(dz, taus, axis=0, initial=0.0)
    g_new = base.g[0] + integrate.cumulative_trapezoid(dg, taus, axis=0, initial=0.0)

    # exact time derivative of xi in the moving basis
    cdot = np.where(kap > 0, -kap * a0.reshape((-1,) + (1,) * (n + 1)) * c + s, 0.0)
    for sl in bsl:
        cdot[(slice(None),) + sl] = a0 * c[(slice(None),) + sl] + s[(slice(None),) + sl]
    for sl in gsl.values():
        cdot[(slice(None),) + sl] = s[(slice(None),) + sl]
    rate = (base.da / (2 * a0)).reshape((-1,) + (1,) * (n + 1))
    xdot_a = cdot + rate * dilation_generator(c, n)

    w = base.basis_weight
    xi = rebase_batch(c, a0, w, n)
    xi_dot = rebase_batch(xdot_a, a0, w, n)

    beta_path = np.stack([c[(slice(None),) + sl] * beta_scale(a0, n) for sl in bsl], axis=1)
    gamma_path = np.zeros((M1, n, n))
    for (i, j), sl in gsl.items():
        gamma_path[:, i, j] = gamma_path[:, j, i] = c[(slice(None),) + sl] * gamma_scale(a0, i, j, n)

    path = FlowPath(taus=taus, a=a_new, z=z_new, g=g_new, da=da, dz=dz, dg=dg, xi=xi,
                    basis_weight=w, xi_dot=xi_dot, frame_a=a0.copy(),
                    beta_path=beta_path, gamma_path=gamma_path)
    coeffs = CorrectionCoeffs(beta_path[0].copy(), gamma_path[0].copy())
    return FrozenSolution(path, coeffs, budget)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def xi_norms(path: FlowPath, a: float = 0.5, s: int = 2) -> np.ndarray:
    return np.sqrt(sobolev_sq_coeffs(path.xi, path.basis_weight, a, s, path.n_axis))


def orthogonality_profile(path: FlowPath) -> np.ndarray:
    """Residual of the orthogonality conditions at every node (frame weight)."""
    ca = rebase_batch(path.xi, path.basis_weight, path.frame_a, path.n_axis)
    return np.array([orthogonality_residual_coeffs(ca[i], path.frame_a[i], path.n_axis)
                     for i in range(len(path))])


@dataclass(frozen=True)
class MembershipReport:
    """Ratios ``bound / value`` per node for the three decay conditions (``inf`` when value is 0)."""

    sigma_ratio: np.ndarray
    xi_ratio: np.ndarray
    pivot_ratio: np.ndarray
    passed: bool
    first_violation: tuple | None
    smallest_c0: float

    @property
    def margin(self) -> float:
        return float(min(self.sigma_ratio.min(), self.xi_ratio.min(), self.pivot_ratio.min()))


def _ratio(bound, value):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(value > 0, bound / np.where(value > 0, value, 1.0), np.inf)


def membership_check(path: FlowPath, delta: float, c0: float = 10.0, c: float = 1.0,
                     s: int = 2) -> MembershipReport:
    """Check ``|sigma_t| <= c0 delta <tau>^-2``, ``||xi||_s <= delta <tau>^-2`` and
    ``||xi||_{s,b}^2 <= c`` node by node."""
    jt = japanese(path.taus)
    sd = np.linalg.norm(path.sigma_dot_matrix(), axis=1)
    xs = xi_norms(path, 0.5, s)
    piv = sobolev_sq_coeffs(path.xi, path.basis_weight, pivot_weight(delta), s, path.n_axis)
    r1 = _ratio(c0 * delta / jt**2, sd)
    r2 = _ratio(delta / jt**2, xs)
    r3 = _ratio(np.full_like(piv, c), piv)
    first = None
    for name, r in (("sigma_dot", r1), ("xi", r2), ("pivot", r3)):
        bad = np.flatnonzero(r < 1)
        if bad.size and (first is None or bad[0] < first[0]):
            first = (int(bad[0]), float(path.taus[bad[0]]), name)
    smallest_c0 = float(np.max(sd * jt**2) / delta) if delta > 0 else np.inf
    return MembershipReport(r1, r2, r3, first is None, first, smallest_c0)
