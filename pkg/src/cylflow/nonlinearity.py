"""F-functional, its gradient, and the nonlinear remainder N(a, xi).

For a graph ``v(y, theta) > 0`` over the cylinder the weighted area is

    F(v) = e^{k/2} int exp(-a(|y|^2 + v^2)/2) v^k J dy dtheta,
    J = sqrt(1 + |grad_y v|^2 + v^-2 v_theta^2),

normalized so that the cylinder ``v0 = sqrt(k/a)`` has
``F = sqrt(k/a) 2 pi (2 pi / a)^{1/2}`` (the Gaussian in ``v`` equals
``e^{-k/2}`` there).  Its Euler-Lagrange operator is

    F'(v) = -Delta_y v + a y.grad_y v - v^-2 v_tt - a v + k/v + N1(v),
    N1 = (v^-4 v_tt v_t^2 + v^-3 v_t^2 + 2 v^-2 v_t sum_i v_i v_it
          + sum_ij v_i v_j v_ij) / J^2,

with ``dF[h] = <mu F'(v), h>_a`` for the mobility
``mu = e^{k/2} v^k exp(-a v^2/2) / J`` (``mu = 1`` at the cylinder).
Writing ``v = v0 + xi`` gives ``F'(v) = L(a) xi + N(a, xi)`` with

    N(a, xi) = (a/k - v^-2) xi_tt - a v + k/v + 2 a xi + N1(v).

All rational algebra happens pointwise on a 3/2-padded collocation grid;
derivatives are exact in coefficient space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from . import kernels
from .errors import DomainError, GraphConditionError, PreconditionError
from .spectral_operator import K_SPHERE, ProjectionSet, project
from .weighted_space import (
    Grid,
    SpectralField,
    coeffs_from_values,
    derivative_coeffs,
    make_grid,
    rebase,
    rebase_coeffs,
    sobolev_norm,
    values_from_coeffs,
)

K = K_SPHERE


@lru_cache(maxsize=1)
def calibrated_constants() -> dict:
    """Constants measured by :mod:`cylflow.calibrate` (frozen in the package)."""
    text = resources.files("cylflow").joinpath("constants.json").read_text()
    return json.loads(text)


def headroom_constant(name: str) -> float:
    d = calibrated_constants()
    return d[name] * d.get("headroom", 1.25)


@dataclass(frozen=True, eq=False)
class GraphFunction:
    """A radius profile ``v`` together with the weight ``a`` it is measured in."""

    v: SpectralField
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a}")
        vals = values_from_coeffs(self.v.coeffs, self.v.basis_weight, _grid_for(self.v))
        _check_graph(vals)

    @classmethod
    def from_perturbation(cls, xi: SpectralField, a: float) -> "GraphFunction":
        return cls(cylinder(a, xi.trunc, xi.n_axis, xi.basis_weight) + xi, a)


def cylinder(a: float, trunc, n_axis: int, basis_weight: float = 0.5) -> SpectralField:
    return SpectralField.constant(math.sqrt(K / a), trunc, n_axis, basis_weight)


def _grid_for(phi: SpectralField) -> Grid:
    return make_grid(phi.trunc, phi.n_axis, phi.basis_weight, padded=True)


def _check_graph(v: np.ndarray) -> None:
    bad = ~(v > 0)
    if np.any(bad):
        raise GraphConditionError(
            f"graph condition fails at {int(bad.sum())} grid node(s); min v = {np.nanmin(v):.3e}")


# ---------------------------------------------------------------------------
# grid evaluation
# ---------------------------------------------------------------------------

@dataclass
class GridData:
    """Values of ``xi``/``v`` and their derivatives on a padded grid (flattened)."""

    grid: Grid
    batch_shape: tuple
    xi: np.ndarray
    v: np.ndarray
    vy: np.ndarray      # (n, P)
    vt: np.ndarray
    vyy: np.ndarray     # (n, n, P)
    vyt: np.ndarray     # (n, P)
    vtt: np.ndarray
    a: np.ndarray       # per point


def grid_data(xi_coeffs: np.ndarray, w: float, a, n_axis: int, check: bool = True) -> GridData:
    """Evaluate ``xi`` (possibly batched) and ``v = sqrt(k/a) + xi`` on the padded grid.

    ``a`` is a scalar or an array matching the batch shape.
    """
    N = xi_coeffs.shape[-2] - 1
    M = (xi_coeffs.shape[-1] - 1) // 2
    grid = make_grid((N, M), n_axis, w, padded=True)
    batch = xi_coeffs.shape[: xi_coeffs.ndim - n_axis - 1]
    nb = len(batch)

    def ev(orders):
        c = derivative_coeffs(xi_coeffs, w, orders, n_axis) if any(orders) else xi_coeffs
        return values_from_coeffs(c, w, grid).reshape(-1)

    def unit(*pairs):
        o = [0] * (n_axis + 1)
        for ax in pairs:
            o[ax] += 1
        return o

    th = n_axis
    xi = ev(unit())
    vy = np.stack([ev(unit(i)) for i in range(n_axis)])
    vt = ev(unit(th))
    vyy = np.empty((n_axis, n_axis, xi.size))
    for i in range(n_axis):
        for j in range(i, n_axis):
            vyy[i, j] = vyy[j, i] = ev(unit(i, j))
    vyt = np.stack([ev(unit(i, th)) for i in range(n_axis)])
    vtt = ev(unit(th, th))
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr <= 0):
        raise DomainError("a must be positive")
    npts = int(np.prod(grid.shape))
    if nb == 0:
        a_pt = np.full(npts, float(a_arr))
    else:
        a_pt = np.broadcast_to(np.broadcast_to(a_arr, batch)[..., None], batch + (npts,)).reshape(-1)
    v = np.sqrt(K / a_pt) + xi
    if check:
        _check_graph(v)
    return GridData(grid, batch, xi, v, vy, vt, vyy, vyt, vtt, a_pt)


def _pointwise(gd: GridData):
    return kernels.nonlinear_pointwise(gd.a, K, gd.xi, gd.v, gd.vy, gd.vt, gd.vyy, gd.vyt, gd.vtt)


def _project(vals: np.ndarray, gd: GridData, basis_weight: float) -> np.ndarray:
    shaped = vals.reshape(gd.batch_shape + gd.grid.shape)
    return coeffs_from_values(shaped, gd.grid, basis_weight)


def N_coeffs(a, xi_coeffs: np.ndarray, w: float, n_axis: int, out_weight: float | None = None,
             chunk: int = 256) -> np.ndarray:
    """Batched ``N(a, xi)``; ``a`` is a scalar or one value per batch entry.

    Large batches are processed in chunks to bound memory.  The result is
    expanded in basis weight ``out_weight`` (default ``w``).
    """
    ow = w if out_weight is None else out_weight
    nb = xi_coeffs.ndim - n_axis - 1
    if nb == 0:
        if not np.any(xi_coeffs):
            return np.zeros_like(xi_coeffs)       # N(a, 0) = 0 exactly; skip roundoff
        gd = grid_data(xi_coeffs, w, a, n_axis)
        return _project(_pointwise(gd)[0], gd, ow)
    if nb != 1:
        raise DomainError("only a single batch axis is supported")
    a_arr = np.broadcast_to(np.asarray(a, dtype=float), xi_coeffs.shape[:1])
    out = np.empty(xi_coeffs.shape)
    for s in range(0, xi_coeffs.shape[0], chunk):
        sl = slice(s, s + chunk)
        gd = grid_data(xi_coeffs[sl], w, a_arr[sl], n_axis)
        out[sl] = _project(_pointwise(gd)[0], gd, ow)
    zero = ~np.any(xi_coeffs.reshape(xi_coeffs.shape[0], -1), axis=1)
    out[zero] = 0.0
    return out


def N_apply(a: float, xi: SpectralField) -> SpectralField:
    """Nonlinear remainder ``N(a, xi)`` expanded in the basis of ``xi``."""
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    return SpectralField(N_coeffs(a, xi.coeffs, xi.basis_weight, xi.n_axis), xi.basis_weight)


def N_grid_values(a: float, xi: SpectralField) -> tuple[np.ndarray, GridData]:
    """Unprojected pointwise values of ``N`` on the padded grid."""
    gd = grid_data(xi.coeffs, xi.basis_weight, a, xi.n_axis)
    return _pointwise(gd)[0].reshape(gd.grid.shape), gd


def _as_graph(v, a):
    if isinstance(v, GraphFunction):
        return v.v, v.a if a is None else a
    if a is None:
        raise DomainError("weight a is required")
    return v, a


def _drift_part(v: SpectralField, a: float) -> SpectralField:
    """``-Delta_y v + a y.grad_y v`` (diagonal ``a|alpha|`` in the a-basis)."""
    from .spectral_operator import kappa_lattice
    va = rebase(v, a)
    deg = kappa_lattice(v.trunc, v.n_axis)[..., :1] + 2.0   # |alpha|, m = 0 slice
    return rebase(SpectralField(va.coeffs * a * deg, a), v.basis_weight)


def F_gradient(v, a: float | None = None) -> SpectralField:
    """Euler-Lagrange operator ``F'_a(v)``, evaluated pseudo-spectrally."""
    v, a = _as_graph(v, a)
    xi = v - cylinder(a, v.trunc, v.n_axis, v.basis_weight)
    gd = grid_data(xi.coeffs, v.basis_weight, a, v.n_axis)
    rest = _pointwise(gd)[1]
    return _drift_part(v, a) + SpectralField(_project(rest, gd, v.basis_weight), v.basis_weight)


def _area_terms(v: SpectralField, a: float):
    gd = grid_data((v - cylinder(a, v.trunc, v.n_axis, v.basis_weight)).coeffs,
                   v.basis_weight, a, v.n_axis)
    J = np.sqrt(1.0 + np.einsum("ip,ip->p", gd.vy, gd.vy) + gd.vt**2 / gd.v**2)
    dens = math.exp(K / 2) * np.exp(-a * gd.v**2 / 2) * gd.v**K
    W = gd.grid.quadrature_weights(a).reshape(-1)
    return gd, J, dens, W


def F_value(v, a: float | None = None) -> float:
    """Weighted area of the graph of ``v`` (Gauss quadrature on the padded grid)."""
    v, a = _as_graph(v, a)
    gd, J, dens, W = _area_terms(v, a)
    return float(np.sum(W * dens * J))


def F_variation(v, h: SpectralField, a: float | None = None) -> float:
    """``dF[h] = <mu F'(v), h>_a`` with the mobility ``mu``."""
    v, a = _as_graph(v, a)
    gd, J, dens, W = _area_terms(v, a)
    rest = _pointwise(gd)[1]
    drift = values_from_coeffs(_drift_part(v, a).coeffs, v.basis_weight, gd.grid).reshape(-1)
    hv = values_from_coeffs(h.coeffs, h.basis_weight, gd.grid).reshape(-1)
    mu = dens / J
    return float(np.sum(W * mu * (drift + rest) * hv))


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------

def _band_check(a: float, delta: float) -> None:
    tol = 1e-12
    if not (0.5 + delta - tol <= a <= 0.5 + 2 * delta + tol):
        raise DomainError(f"a = {a} outside [1/2 + delta, 1/2 + 2 delta] for delta = {delta}")


def projected_N_bound(a: float, xi: SpectralField, modes: ProjectionSet, delta: float,
                      label=(2, 0), c: float | None = None, s: int = 2) -> tuple[float, float]:
    """``(||P^label N(a, xi)||_{s-2,a}, c ||xi||_s^2)``."""
    _band_check(a, delta)
    if c is None:
        c = headroom_constant("A3_c")
    Nf = N_apply(a, xi)
    lhs = sobolev_norm(project(Nf, modes, label), a, s - 2)
    return lhs, c * sobolev_norm(xi, 0.5, s) ** 2


def N_lipschitz(a0: float, xi0: SpectralField, a1: float, xi1: SpectralField, delta1: float,
                C: float | None = None, s: int = 2) -> tuple[float, float]:
    """``(||N(a1,xi1) - N(a0,xi0)||_{s-2}, C delta1 (|a1-a0| + ||xi1-xi0||_s))``."""
    for a, xi in ((a0, xi0), (a1, xi1)):
        if not 0 < a < 1:
            raise DomainError(f"need 0 < a < 1, got {a}")
        if sobolev_norm(xi, 0.5, s) > delta1 * (1 + 1e-12):
            raise DomainError("field outside the delta1-ball")
    if C is None:
        C = headroom_constant("C2_C")
    dN = N_apply(a1, xi1) - N_apply(a0, xi0)
    lhs = sobolev_norm(dN, 0.5, s - 2)
    rhs = C * delta1 * (abs(a1 - a0) + sobolev_norm(xi1 - xi0, 0.5, s))
    return lhs, rhs


def pointwise_bound(a: float, xi: SpectralField, C: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Node-wise ``|N|`` against ``C (1+|y|)(|xi|^2 + |D xi|^2 + |D^2 xi|^2)``.

    ``D`` collects the axial derivatives and the angular derivative.
    """
    if C is None:
        C = headroom_constant("C0_C")
    vals, gd = N_grid_values(a, xi)
    n = xi.n_axis
    d1 = np.einsum("ip,ip->p", gd.vy, gd.vy) + gd.vt**2
    d2 = np.einsum("ijp,ijp->p", gd.vyy, gd.vyy) + 2 * np.einsum("ip,ip->p", gd.vyt, gd.vyt) + gd.vtt**2
    coords = gd.grid.coords()
    r = np.zeros(gd.grid.shape)
    for i in range(n):
        r = r + coords[i] ** 2
    r = np.sqrt(r).reshape(-1)
    rhs = C * (1 + r) * (gd.xi**2 + d1 + d2)
    return np.abs(vals).reshape(-1), rhs


# ---------------------------------------------------------------------------
# diagnostics shared by the verify suite and the tests
# ---------------------------------------------------------------------------

def expansion_residual(a: float, xi: SpectralField, s: int = 2) -> float:
    """``||F'_a(sqrt(k/a) + xi) - L(a) xi - N(a, xi)||_{s-2,a}``."""
    from .spectral_operator import apply_L
    v = cylinder(a, xi.trunc, xi.n_axis, xi.basis_weight) + xi
    r = F_gradient(v, a) - apply_L(xi, a) - N_apply(a, xi)
    return sobolev_norm(r, a, s - 2)


def gradient_consistency(v: SpectralField, h: SpectralField, a: float,
                         eps=(0.1, 0.05, 0.025, 0.0125)) -> tuple[np.ndarray, float]:
    """Central-difference errors of ``F_value`` against ``F_variation`` and their order.

    Returns ``(errors, order)`` where ``order`` is the log-log slope of the
    error against the step.
    """
    exact = F_variation(v, h, a)
    eps = np.asarray(eps, dtype=float)
    errs = np.array([abs((F_value(v + h * e, a) - F_value(v - h * e, a)) / (2 * e) - exact) for e in eps])
    slope = float(np.polyfit(np.log(eps), np.log(errs), 1)[0])
    return errs, slope


def quadratic_slope(a: float, xi: SpectralField, modes: ProjectionSet, label=(2, 0),
                    eps=None, s: int = 2) -> float:
    """Log-log slope of ``||P^label N(a, eps xi)||_{s-2,a}`` against ``eps``."""
    if eps is None:
        eps = np.geomspace(1e-3, 1e-1, 7)
    vals = [sobolev_norm(project(N_apply(a, xi * e), modes, label), a, s - 2) for e in eps]
    return float(np.polyfit(np.log(eps), np.log(vals), 1)[0])
