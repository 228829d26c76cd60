"""Symmetry parameters, the ansatz W(sigma), and the modulation equations.

The profile is written as ``v = W(sigma) + xi`` with

    W(sigma) = sqrt(k/a) + sum_{l,j} g_{lj} y^j omega^l + sum_l (z_l / lambda) omega^l,

and ``xi`` evolves by ``xi_t = -L(a) xi - N(a, xi) - dW(sigma) sigma_t``.
The modulation equations choose ``sigma_t`` so that the coefficients of
``xi`` on the modes (0,0), (0,1), (1,1) stay zero.  Because those modes are
single elements of the Hermite basis orthogonal at ``a``, the equations are
solved exactly in that moving basis.  The time derivative of the basis
itself (through ``a``) is the dilation generator ``K`` of
:func:`dilation_generator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .spectral_operator import (
    K_SPHERE,
    ORTHOGONALITY_LABELS,
    ProjectionSet,
    build_modes,
    circle_component,
)
from .weighted_space import (
    SpectralField,
    fourier_index,
    inner_product,
    norm0,
    rebase,
    rebase_coeffs,
)

K = K_SPHERE


@dataclass(frozen=True, eq=False)
class SymmetryParams:
    """``sigma = (g, z, a)`` with the rotation stored through its tilt block.

    ``g_tilt[l, j]`` multiplies ``y^j omega^l``; it has shape ``(k+1, n_axis)``.
    The identity rotation has a zero tilt block.
    """

    g_tilt: np.ndarray
    z: np.ndarray
    a: float

    def __post_init__(self):
        g = np.array(self.g_tilt, dtype=float, copy=True)
        z = np.array(self.z, dtype=float, copy=True).reshape(-1)
        if g.ndim != 2 or g.shape[0] != K + 1:
            raise DomainError(f"g_tilt must have shape (k+1, n_axis), got {g.shape}")
        if z.shape != (K + 1,):
            raise DomainError(f"z must have length k+1 = {K + 1}, got {z.shape}")
        if not (np.isfinite(self.a) and self.a > 0):
            raise DomainError(f"a must be positive, got {self.a}")
        g.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "g_tilt", g)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "a", float(self.a))

    @property
    def n_axis(self) -> int:
        return self.g_tilt.shape[1]

    @classmethod
    def identity(cls, a: float, n_axis: int = 1) -> "SymmetryParams":
        return cls(np.zeros((K + 1, n_axis)), np.zeros(K + 1), a)

    def as_vector(self) -> np.ndarray:
        """Concatenated coordinates ``(g_tilt flattened, z, a)``."""
        return np.concatenate([self.g_tilt.ravel(), self.z, [self.a]])

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_axis: int) -> "SymmetryParams":
        ng = (K + 1) * n_axis
        return cls(vec[:ng].reshape(K + 1, n_axis), vec[ng:ng + K + 1], vec[-1])


@dataclass(frozen=True, eq=False)
class ModulationVector:
    """Tangent vector ``(dg_tilt, dz, da)`` to the symmetry parameters."""

    dg_tilt: np.ndarray
    dz: np.ndarray
    da: float

    def __post_init__(self):
        dg = np.array(self.dg_tilt, dtype=float, copy=True)
        dz = np.array(self.dz, dtype=float, copy=True).reshape(-1)
        if not (np.all(np.isfinite(dg)) and np.all(np.isfinite(dz)) and np.isfinite(self.da)):
            raise DomainError("modulation vector has non-finite entries")
        dg.setflags(write=False)
        dz.setflags(write=False)
        object.__setattr__(self, "dg_tilt", dg)
        object.__setattr__(self, "dz", dz)
        object.__setattr__(self, "da", float(self.da))

    @classmethod
    def zero(cls, n_axis: int = 1) -> "ModulationVector":
        return cls(np.zeros((K + 1, n_axis)), np.zeros(K + 1), 0.0)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.dg_tilt.ravel(), self.dz, [self.da]])

    def __add__(self, other: "ModulationVector") -> "ModulationVector":
        return ModulationVector(self.dg_tilt + other.dg_tilt, self.dz + other.dz, self.da + other.da)

    def __sub__(self, other: "ModulationVector") -> "ModulationVector":
        return ModulationVector(self.dg_tilt - other.dg_tilt, self.dz - other.dz, self.da - other.da)


def s00(a: float) -> float:
    """``d/da sqrt(k/a) = -(sqrt(k)/2) a^{-3/2}``."""
    return -(math.sqrt(K) / 2) * a ** -1.5


def _check_shift(sigma: SymmetryParams, lam: float) -> None:
    if not lam > 0:
        raise DomainError(f"rescale factor must be positive, got {lam}")
    if np.linalg.norm(sigma.z) / lam >= math.sqrt(K / sigma.a):
        raise DomainError("transversal shift |z|/lambda must stay below the radius sqrt(k/a)")


def _slots(n_axis: int, M: int):
    zero = (0,) * n_axis
    s0 = zero + (0,)
    s0l = [zero + (fourier_index(circle_component(l), M),) for l in (1, 2)]
    sel = []
    for l in (1, 2):
        row = []
        for j in range(n_axis):
            e = [0] * n_axis
            e[j] = 1
            row.append(tuple(e) + (fourier_index(circle_component(l), M),))
        sel.append(row)
    return s0, s0l, sel


def W_eval(sigma: SymmetryParams, lam: float = 1.0, trunc=(24, 8),
           basis_weight: float = 0.5) -> SpectralField:
    """The ansatz ``W(sigma)`` as a field (constant, ``omega^l`` and ``y^j omega^l`` only)."""
    _check_shift(sigma, lam)
    n = sigma.n_axis
    N, M = trunc
    c = np.zeros((N + 1,) * n + (2 * M + 1,))
    s0, s0l, sel = _slots(n, M)
    c[s0] = math.sqrt(K / sigma.a)
    for l in range(2):
        c[s0l[l]] = sigma.z[l] / lam
        for j in range(n):
            # y = h_1(sqrt(w) y) / sqrt(w)
            c[sel[l][j]] = sigma.g_tilt[l, j] / math.sqrt(basis_weight)
    return SpectralField(c, basis_weight)


def dW_eval(sigma: SymmetryParams, dsigma: ModulationVector, lam: float = 1.0, trunc=(24, 8),
            basis_weight: float = 0.5) -> SpectralField:
    """Derivative of :func:`W_eval` in ``sigma`` along ``dsigma`` (``lam`` held fixed)."""
    _check_shift(sigma, lam)
    n = sigma.n_axis
    N, M = trunc
    c = np.zeros((N + 1,) * n + (2 * M + 1,))
    s0, s0l, sel = _slots(n, M)
    c[s0] = s00(sigma.a) * dsigma.da
    for l in range(2):
        c[s0l[l]] = dsigma.dz[l] / lam
        for j in range(n):
            c[sel[l][j]] = dsigma.dg_tilt[l, j] / math.sqrt(basis_weight)
    return SpectralField(c, basis_weight)


def dilation_generator(c: np.ndarray, n_axis: int) -> np.ndarray:
    """``2a d/da`` of the a-basis, acting on coefficients.

    For ``xi = sum c_mu phi_mu^a`` one has ``sum c_mu d_a phi_mu^a
    = (1/2a) sum_nu (K c)_nu phi_nu^a`` with
    ``(K c)_nu = sum_i [nu_i c_nu + sqrt((nu_i+1)(nu_i+2)) c_{nu+2e_i}]``.
    Leading batch axes are allowed.
    """
    N = c.shape[-2] - 1
    base = c.ndim - n_axis - 1
    out = np.zeros_like(c)
    deg = np.arange(N + 1, dtype=float)
    up = np.sqrt((deg[:-2] + 1) * (deg[:-2] + 2))
    for i in range(n_axis):
        ax = base + i
        shape = [1] * c.ndim
        shape[ax] = N + 1
        out += deg.reshape(shape) * c
        lo = [slice(None)] * c.ndim
        hi = [slice(None)] * c.ndim
        lo[ax] = slice(0, N - 1)
        hi[ax] = slice(2, N + 1)
        shape[ax] = N - 1
        out[tuple(lo)] += up.reshape(shape) * c[tuple(hi)]
    return out


@dataclass(frozen=True)
class ModulationParts:
    """Linear part ``F xi`` and remainder ``M(sigma, xi)`` of the modulation vector."""

    linear: ModulationVector
    remainder: ModulationVector

    @property
    def total(self) -> ModulationVector:
        return self.linear + self.remainder


def solve_modulation(a: float, c: np.ndarray, Nc: np.ndarray, n_axis: int, lam: float = 1.0):
    """Modulation equations from a-basis coefficients of ``xi`` and ``N(a, xi)``.

    Works on a single node (no batch axes).  Returns ``(linear, total)`` as
    ``(da, zeta, dg)`` triples where ``zeta = dz / lam``.
    """
    M = (c.shape[-1] - 1) // 2
    s0, s0l, sel = _slots(n_axis, M)
    Kc = dilation_generator(c, n_axis)
    denom = s00(a) + Kc[s0] / (2 * a)
    if denom == 0 or not np.isfinite(denom):
        raise ArithmeticError("degenerate normalization in the dilation equation")
    da = (2 * a * c[s0] - Nc[s0]) / denom
    rate = da / (2 * a)
    zeta = np.array([a * c[s0l[l]] - Nc[s0l[l]] - rate * Kc[s0l[l]] for l in range(2)])
    dg = np.array([[-math.sqrt(a) * (Nc[sel[l][j]] + rate * Kc[sel[l][j]]) for j in range(n_axis)]
                   for l in range(2)])
    lin = (2 * a * c[s0] / s00(a), np.array([a * c[s0l[l]] for l in range(2)]),
           np.zeros((2, n_axis)))
    return lin, (da, zeta, dg)


def modulation_split(sigma: SymmetryParams, xi: SpectralField, modes: ProjectionSet | None = None,
                     lam: float = 1.0) -> ModulationParts:
    """``F(sigma) xi`` and ``M(sigma, xi)`` such that their sum is the modulation vector."""
    from .nonlinearity import N_coeffs
    a = sigma.a
    if modes is not None and abs(modes.a - a) > 1e-14:
        raise DomainError(f"modes built at a = {modes.a}, sigma has a = {a}")
    if xi.n_axis != sigma.n_axis:
        raise DomainError("field and symmetry parameters disagree on n_axis")
    c = rebase(xi, a).coeffs
    Nc = N_coeffs(a, xi.coeffs, xi.basis_weight, xi.n_axis, out_weight=a)
    lin, tot = solve_modulation(a, c, Nc, xi.n_axis, lam)
    L = ModulationVector(lin[2], lam * lin[1], lin[0])
    T = ModulationVector(tot[2], lam * tot[1], tot[0])
    return ModulationParts(L, T - L)


def modulation_rhs(sigma: SymmetryParams, xi: SpectralField, modes: ProjectionSet | None = None,
                   lam: float = 1.0) -> ModulationVector:
    """``sigma_t`` keeping ``xi`` orthogonal to the (0,0), (0,1), (1,1) modes."""
    return modulation_split(sigma, xi, modes, lam).total


def orthogonality_residual(xi: SpectralField, a: float, modes: ProjectionSet | None = None) -> float:
    """``max |<xi, Sigma>_a| / ||Sigma||_{0,a}`` over the orthogonality modes."""
    if modes is None:
        modes = build_modes(a, xi.trunc, xi.n_axis)
    worst = 0.0
    for lab in ORTHOGONALITY_LABELS:
        for m in modes.by_label(lab):
            worst = max(worst, abs(inner_product(xi, m.field, a)) / norm0(m.field, a))
    return worst


def orthogonality_residual_coeffs(c_a: np.ndarray, a: float, n_axis: int) -> np.ndarray:
    """Batched residual from coefficients already expanded in the a-basis.

    For single-element modes ``|<xi, phi>|/||phi|| = |c| ||phi||``.
    """
    M = (c_a.shape[-1] - 1) // 2
    s0, s0l, sel = _slots(n_axis, M)
    hn = (2 * math.pi / a) ** (n_axis / 4)   # ||h_alpha||_{0,a} without the circle factor
    vals = [np.abs(c_a[(...,) + s0]) * hn * math.sqrt(2 * math.pi)]
    for l in range(2):
        vals.append(np.abs(c_a[(...,) + s0l[l]]) * hn * math.sqrt(math.pi))
        for j in range(n_axis):
            vals.append(np.abs(c_a[(...,) + sel[l][j]]) * hn * math.sqrt(math.pi))
    return np.max(np.stack(vals), axis=0)
