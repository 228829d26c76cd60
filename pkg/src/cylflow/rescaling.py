"""Blow-up rescaling between the original flow ``(x, t)`` and ``(y, tau)``.

The scale factor obeys ``lambda(t)^2 = 2 int_t^T a`` so that
``lambda lambda_t = -a``, and rescaled time is ``tau(t) = int_0^t lambda^{-2}``.
With constant ``a = a0`` both have closed forms,
``lambda = sqrt(2 a0 (T - t))`` and ``tau = -log(1 - t/T) / (2 a0)``.

This ``lambda`` is unrelated to the integrating factor ``exp(-int a dtau)``
carried by :class:`~cylflow.frozen_solver.FlowPath` as ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, interpolate, optimize
from scipy.linalg import expm

from .errors import DomainError, ShapeError
from .frozen_solver import FlowPath, japanese
from .modulation import K
from .weighted_space import fourier_matrix, hermite_functions


def geometric_t_grid(T: float, n: int = 400, min_gap: float = 1e-10) -> np.ndarray:
    """Times in ``[0, T)`` clustering geometrically towards ``T``."""
    gaps = np.geomspace(1.0, min_gap, n)
    return T * (1.0 - gaps)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _gl(f, lo, hi):
    """16-point Gauss-Legendre of a vectorized ``f`` over each ``[lo, hi]`` (broadcast)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    nodes = lo[..., None] + half[..., None] * (1.0 + _GL_X)
    return half * np.sum(_GL_W * f(nodes), axis=-1)


@dataclass(frozen=True, eq=False)
class RescalingState:
    """Scale factor and time change for one blow-up time ``T``.

    Parameters
    ----------
    T : float
        Blow-up time.
    a : callable
        Dilation ``a(t)`` on ``[0, T]``.
    t_grid : ndarray
        Sample times (geometric towards ``T`` by default).
    lam : ndarray
        ``lambda`` at ``t_grid``.
    tau : ndarray
        ``tau`` at ``t_grid``.
    """

    T: float
    a: Callable[[np.ndarray], np.ndarray]
    t_grid: np.ndarray
    lam: np.ndarray
    tau: np.ndarray
    half_sq: np.ndarray      # int_t^T a at the nodes, i.e. lambda^2 / 2

    @property
    def gaps(self) -> np.ndarray:
        """``T - t`` at the nodes."""
        return self.T - self.t_grid

    def _a_of_gap(self, u):
        return self.a(self.T - np.asarray(u))

    def _int_to_T(self, t):
        """``int_t^T a`` for scalar or array ``t``, integrated from the next node."""
        t = np.asarray(t, dtype=float)
        return self._int_gap(self.T - t, t)

    def _int_gap(self, u, t):
        idx = np.clip(np.searchsorted(self.t_grid, t, side="right"), 0, len(self.t_grid))
        u_next = np.append(self.gaps, 0.0)[idx]
        base = np.append(self.half_sq, 0.0)[idx]
        return base + _gl(self._a_of_gap, u_next, u)

    def lambda_of_t(self, t: float) -> float:
        t = float(t)
        if not 0.0 <= t <= self.T:
            raise DomainError(f"t = {t} outside [0, T]")
        return math.sqrt(max(2.0 * float(self._int_to_T(t)), 0.0))

    def tau_of_t(self, t: float) -> float:
        """``int_0^t lambda^{-2}``, integrated from the preceding node."""
        t = float(t)
        if not 0.0 <= t < self.T:
            raise DomainError(f"t = {t} outside [0, T)")
        i = min(max(int(np.searchsorted(self.t_grid, t, side="right")) - 1, 0), len(self.t_grid) - 1)
        if t == self.t_grid[i]:
            return float(self.tau[i])
        u_i, u = float(self.gaps[i]), self.T - t
        f = lambda v: 0.5 / self._int_gap(v, np.full(np.shape(v), t))
        return float(self.tau[i] + _gl(f, u, u_i))

    def t_of_tau(self, tau: float) -> float:
        """Inverse of :meth:`tau_of_t` by bracketed root finding."""
        if tau < 0:
            raise DomainError("tau must be non-negative")
        if tau == 0:
            return 0.0
        j = int(np.searchsorted(self.tau, tau))
        if j >= len(self.tau):
            raise DomainError(f"tau = {tau} beyond the stored grid (max {self.tau[-1]:.4g})")
        if self.tau[j] == tau:
            return float(self.t_grid[j])
        lo, hi = float(self.t_grid[j - 1]), float(self.t_grid[j])
        return optimize.brentq(lambda t: self.tau_of_t(t) - tau, lo, hi, xtol=1e-300, rtol=1e-15,
                               maxiter=400)

    def identity_residual(self) -> float:
        """``max |lambda lambda_t + a|`` over interior nodes.

        ``lambda lambda_t`` is minus the five-point central difference of
        ``lambda^2/2`` in the gap ``u = T - t``, with a step proportional to
        ``min(u, t)``.
        """
        t = self.t_grid[1:-1]
        u = self.gaps[1:-1]
        h = 1e-3 * np.minimum(u, t)
        f = lambda du: self._int_gap(u + du, t - du)
        d = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
        return float(np.max(np.abs(d - self.a(t))))


def _as_a_callable(a_path, t_grid):
    if callable(a_path):
        return lambda t: np.broadcast_to(np.asarray(a_path(t), dtype=float), np.shape(t)).copy()
    vals = np.asarray(a_path, dtype=float)
    if t_grid is None or vals.shape != np.shape(t_grid):
        raise ShapeError("array a_path needs a matching t_grid")
    if np.all(vals == vals[0]):
        c = float(vals[0])
        return lambda t: np.full(np.shape(t), c)
    spl = interpolate.CubicSpline(t_grid, vals)
    return lambda t: spl(t)


def build_rescaling(a_path, T: float, t_grid: np.ndarray | None = None) -> RescalingState:
    """Build ``lambda`` and ``tau`` from a positive dilation path.

    ``a_path`` is a callable of ``t`` or an array sampled on ``t_grid``
    (interpolated by a cubic spline with knots at the samples, or held
    exactly when constant).  Integrals use 16-point Gauss-Legendre on each
    grid segment; the inner integral inside ``tau`` is nested the same way.
    """
    if not T > 0:
        raise DomainError("blow-up time T must be positive")
    a_fun = _as_a_callable(a_path, t_grid)
    if t_grid is None:
        t_grid = geometric_t_grid(T)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0.0 or np.any(np.diff(t_grid) <= 0) or t_grid[-1] >= T:
        raise DomainError("t_grid must start at 0, increase strictly and stay below T")
    probe = np.linspace(0.0, T, 257)
    if np.any(a_fun(t_grid) <= 0) or np.any(a_fun(probe) <= 0):
        raise DomainError("a must be positive on [0, T)")

    a_gap = lambda u: a_fun(T - np.asarray(u))
    u_nodes = np.append(T - t_grid, 0.0)               # decreasing gaps, ending at T
    seg = _gl(a_gap, u_nodes[1:], u_nodes[:-1])
    half_sq = np.cumsum(seg[::-1])[::-1]                # int_{t_i}^T a
    nxt_half = half_sq[1:]                              # at the right end of interior segments
    u_hi, u_lo = u_nodes[:-2], u_nodes[1:-1]            # segment i spans gaps [u_lo, u_hi]

    def inv_sq(v):                                      # 1 / lambda^2, v shaped (nseg, q)
        inner = _gl(a_gap, np.broadcast_to(u_lo[:, None], v.shape), v)
        return 0.5 / (nxt_half[:, None] + inner)

    steps = _gl(inv_sq, u_lo, u_hi)
    tau = np.concatenate([[0.0], np.cumsum(steps)])
    lam = np.sqrt(2.0 * half_sq)
    if np.any(np.diff(lam) >= 0) or np.any(np.diff(tau) <= 0):
        raise DomainError("lambda must decrease and tau increase; check a > 0")
    return RescalingState(T, a_fun, t_grid, lam, tau, half_sq)


def rescaling_from_path(path: FlowPath, T: float, n_t: int = 400) -> RescalingState:
    """Rescaling whose ``a(t)`` follows ``path.a(tau)`` along the induced time change.

    In ``tau`` one has ``d(lambda^2)/dtau = -2 a lambda^2`` and ``dt = lambda^2 dtau``,
    so ``t(tau) = lambda(0)^2 int_0^tau exp(-2 int a)`` with ``lambda(0)^2`` fixed by
    ``t(inf) = T``; ``a`` is held at its last value beyond the stored grid.
    """
    taus, a = path.taus, path.a
    if np.all(a == a[0]):
        a0 = float(a[0])
        return build_rescaling(lambda t: np.full(np.shape(t), a0), T, geometric_t_grid(T, n_t))
    A = integrate.cumulative_trapezoid(a, taus, initial=0.0)
    E = np.exp(-2.0 * A)
    steps = 0.5 * np.diff(taus) * (E[1:] + E[:-1])
    tail = np.append(np.cumsum(steps[::-1])[::-1], 0.0) + E[-1] / (2.0 * a[-1])   # int_tau^inf E
    gaps = T * tail / tail[0]                                                      # T - t(tau)
    spl = interpolate.PchipInterpolator(np.log(gaps[::-1]), a[::-1], extrapolate=False)
    lo, hi = float(np.log(gaps[-1])), float(np.log(gaps[0]))
    aM = float(a[-1])

    def a_of_t(t):
        u = np.maximum(T - np.asarray(t, dtype=float), 1e-300)
        lu = np.log(u)
        return np.where(lu <= lo, aM, spl(np.clip(lu, lo, hi)))

    return build_rescaling(a_of_t, T, geometric_t_grid(T, n_t))


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

def tilt_rotation(g_tilt: np.ndarray) -> np.ndarray:
    """Rotation ``exp(G)`` of ``R^{n+k+1}`` for tilt coordinates ``g_tilt[l, i]``.

    ``G`` is antisymmetric with ``G[n+l, i] = g_li`` and ``G[i, n+l] = -g_li``.
    """
    g_tilt = np.asarray(g_tilt, dtype=float)
    kp1, n = g_tilt.shape
    G = np.zeros((n + kp1, n + kp1))
    G[n:, :n] = g_tilt
    G[:n, n:] = -g_tilt.T
    return expm(G)


def evaluate_field(coeffs: np.ndarray, basis_weight: float, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Values at the tensor product of axis points ``y`` (per axis) and angles ``theta``."""
    n_axis = coeffs.ndim - 1
    N = coeffs.shape[0] - 1
    M = (coeffs.shape[-1] - 1) // 2
    H = hermite_functions(math.sqrt(basis_weight) * np.asarray(y, dtype=float), N)   # (len(y), N+1)
    F = fourier_matrix(np.asarray(theta, dtype=float), M)
    out = coeffs
    for ax in range(n_axis):
        out = np.tensordot(H, out, axes=([1], [ax]))
        out = np.moveaxis(out, 0, ax)
    return np.tensordot(out, F, axes=([n_axis], [1]))


@dataclass(frozen=True, eq=False)
class SurfaceSample:
    """Reconstructed points ``X`` at one time, shape ``(len(y),)*n + (P, n+k+1)``."""

    t: float
    tau: float
    lam: float
    points: np.ndarray
    radius: np.ndarray       # sqrt(k/a) + xi at the parameter points
    y: np.ndarray
    theta: np.ndarray
    rotation: np.ndarray
    z: np.ndarray


def _interp_path(path: FlowPath, tau: float):
    if not path.taus[0] <= tau <= path.taus[-1]:
        raise DomainError(f"tau = {tau:.6g} outside the stored path [{path.taus[0]}, {path.taus[-1]}]")
    j = int(np.clip(np.searchsorted(path.taus, tau), 1, len(path.taus) - 1))
    t0, t1 = path.taus[j - 1], path.taus[j]
    w = (tau - t0) / (t1 - t0)
    mix = lambda arr: (1 - w) * arr[j - 1] + w * arr[j]
    return mix(path.a), mix(path.z), mix(path.g), mix(path.xi)


def reconstruct_flow(path: FlowPath, rs: RescalingState, ts, y: np.ndarray | None = None,
                     n_theta: int | None = None) -> list[SurfaceSample]:
    """Points ``X = lambda g (y, (sqrt(k/a)+xi) omega) + (0, z)`` at the requested times."""
    n = path.n_axis
    if y is None:
        y = np.linspace(-4.0, 4.0, 17)
    if n_theta is None:
        n_theta = 2 * path.trunc[1] + 1
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    out = []
    for t in np.atleast_1d(ts):
        tau = rs.tau_of_t(float(t))
        lam = rs.lambda_of_t(float(t))
        a, z, g, xi = _interp_path(path, tau)
        r = math.sqrt(K / a) + evaluate_field(xi, path.basis_weight, y, theta)
        grids = np.meshgrid(*([y] * n), theta, indexing="ij")
        local = np.stack(list(grids[:n]) + [r * np.cos(grids[n]), r * np.sin(grids[n])], axis=-1)
        R = tilt_rotation(g)
        shift = np.concatenate([np.zeros(n), z])
        pts = lam * local @ R.T + shift
        out.append(SurfaceSample(float(t), tau, lam, pts, r, np.asarray(y), theta, R, shift))
    return out


def rescale_points(sample: SurfaceSample) -> np.ndarray:
    """Invert the reconstruction: ``y`` coordinates and circle radius per point."""
    n = sample.points.shape[-1] - (K + 1)
    local = ((sample.points - sample.z) @ sample.rotation) / sample.lam
    return local[..., :n], np.hypot(local[..., n], local[..., n + 1])


def round_trip_error(sample: SurfaceSample) -> float:
    """Max deviation between recovered and original ``(y, sqrt(k/a)+xi)``."""
    ys, r = rescale_points(sample)
    n = ys.shape[-1]
    grids = np.meshgrid(*([sample.y] * n), sample.theta, indexing="ij")
    ey = max(float(np.max(np.abs(ys[..., i] - grids[i]))) for i in range(n))
    return max(ey, float(np.max(np.abs(r - sample.radius))))


# ---------------------------------------------------------------------------
# tangent flow
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangentFlowLimit:
    g_tilt: np.ndarray
    z: np.ndarray
    a: float
    radius: float
    fit_error: float
    deviation: float          # |sigma_inf - sigma(0)|

    @property
    def rotation(self) -> np.ndarray:
        return tilt_rotation(self.g_tilt)


def tangent_flow_limit(path: FlowPath, lo: float = 2.0, tol: float = 0.1) -> TangentFlowLimit:
    """Extrapolate ``sigma(tau) = sigma_inf + c <tau>^{-1}`` to ``tau = inf``.

    Least squares over ``tau >= lo`` per coordinate; ``fit_error`` is the
    largest residual of that fit.  The path counts as non-convergent when
    its variation over the second half of the grid exceeds ``tol`` times
    its total drift from ``sigma(0)``.
    """
    S = path.sigma_matrix()
    sel = path.taus >= lo
    if sel.sum() < 3:
        raise DomainError("too few samples beyond the fit window")
    X = np.stack([np.ones(sel.sum()), 1.0 / japanese(path.taus[sel])], axis=1)
    coef, *_ = np.linalg.lstsq(X, S[sel], rcond=None)
    resid = S[sel] - X @ coef
    err = float(np.max(np.abs(resid))) if resid.size else 0.0
    drift = float(np.max(np.abs(S - S[0])))
    late = float(np.max(np.abs(S[path.taus >= 0.5 * path.taus[-1]] - S[-1])))
    if drift > 0 and late > tol * drift:
        raise DomainError(f"sigma still moves late in the path ({late:.3g} of total drift {drift:.3g})")
    lim = S[0].copy() if drift == 0.0 else coef[0]
    n = path.n_axis
    ng = (K + 1) * n
    g = lim[:ng].reshape(K + 1, n)
    z = lim[ng:ng + K + 1]
    a = float(lim[-1])
    if a <= 0:
        raise DomainError("extrapolated dilation is not positive")
    return TangentFlowLimit(g, z, a, math.sqrt(K / a), err, float(np.linalg.norm(lim - S[0])))
