"""Linearized operator at the cylinder and its zero/unstable eigenmodes.

``L(a) = -(Delta_y - a y.grad_y) - (a/k) Delta_theta - 2a`` is diagonal in the
Hermite basis orthogonal at weight ``a`` with eigenvalue ``a * kappa`` where
``kappa(alpha, m) = |alpha| + m^2/k - 2``.  Everything here works on that
integer lattice; ``a`` only enters as a scale factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError, ResourceError
from .weighted_space import (
    SpectralField,
    TWO_PI,
    fourier_index,
    fourier_signed_modes,
    gaussian_moment,
    inner_product,
    norm0,
    rebase,
)

K_SPHERE = 1
LABELS = ((0, 0), (0, 1), (1, 0), (1, 1), (2, 0))
ORTHOGONALITY_LABELS = ((0, 0), (0, 1), (1, 1))
MAX_DENSE_DIM = 6000


def kappa_lattice(trunc: tuple[int, int], n_axis: int, k: int = K_SPHERE) -> np.ndarray:
    """Integer-lattice eigenvalues ``|alpha| + m^2/k - 2`` in storage layout."""
    N, M = trunc
    deg = np.zeros((N + 1,) * n_axis)
    for i in range(n_axis):
        shape = [1] * n_axis
        shape[i] = N + 1
        deg = deg + np.arange(N + 1).reshape(shape)
    m = fourier_signed_modes(M)
    return deg[..., None] + (m.astype(float) ** 2 / k) - 2.0


@dataclass(frozen=True)
class LinearizedOp:
    """``L(a)`` on a fixed truncation."""

    a: float
    trunc: tuple[int, int]
    n_axis: int = 1

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a}")

    def eigenvalues(self) -> np.ndarray:
        return self.a * kappa_lattice(self.trunc, self.n_axis)

    def __call__(self, phi: SpectralField) -> SpectralField:
        return apply_L(phi, self.a)


def apply_L(phi: SpectralField, a: float) -> SpectralField:
    """Apply ``L(a)``; exact for every field in the truncation.

    The field is re-expanded in the basis orthogonal at ``a`` (a triangular,
    exact change of basis), scaled by the eigenvalues, and mapped back.
    """
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    psi = rebase(phi, a)
    lam = a * kappa_lattice(phi.trunc, phi.n_axis)
    return rebase(SpectralField(psi.coeffs * lam, a), phi.basis_weight)


# ---------------------------------------------------------------------------
# explicit modes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenMode:
    """One explicit zero/unstable mode.

    ``label`` is ``(m, n)``; ``index`` holds the sub-indices ``(i, j, l)``
    that apply (axial ``i``, ``j`` and circle component ``l``, 1-based,
    ``None`` when absent).  ``normalization`` is the scalar prefactor in front
    of the unnormalized polynomial.
    """

    label: tuple[int, int]
    index: tuple
    eigenvalue: float
    field: SpectralField
    normalization: float


@dataclass(frozen=True, eq=False)
class ProjectionSet:
    modes: tuple[EigenMode, ...]
    a: float
    trunc: tuple[int, int]
    n_axis: int

    def by_label(self, label) -> list[EigenMode]:
        label = tuple(label)
        if label not in LABELS:
            raise DomainError(f"unknown mode label {label}")
        return [m for m in self.modes if m.label == label]

    def gram(self) -> np.ndarray:
        fs = [m.field for m in self.modes]
        return np.array([[inner_product(f, g, self.a) for g in fs] for f in fs])

    def rank_report(self, tol: float = 1e-10) -> dict:
        """Numerical rank of the mode Gram matrix and the two codimension counts."""
        G = self.gram()
        d = np.sqrt(np.diag(G))
        C = G / np.outer(d, d)
        ev = np.linalg.eigvalsh(C)
        rank = int(np.sum(ev > tol * ev.max()))
        n = self.n_axis + K_SPHERE
        nk = self.n_axis
        return {
            "modes": len(self.modes),
            "gram_rank": rank,
            "formula_codim": n + 2 + nk * (nk + 3) // 2,
            "dependent_combinations": len(self.modes) - rank,
        }


def circle_component(l: int) -> int:
    """Signed Fourier index for ``omega^l``: l = 1 -> cos, l = 2 -> sin."""
    if l == 1:
        return 1
    if l == 2:
        return -1
    raise DomainError(f"circle component l must be 1 or 2 for k = 1, got {l}")


def sq_norm_y(a: float, n_axis: int, k: int = K_SPHERE) -> float:
    """``||y^i||_{0,a}^2`` over R^n_axis x S^1 by Gaussian moments."""
    base = gaussian_moment(0, a) ** (n_axis - 1)
    return gaussian_moment(2, a) * base * TWO_PI


def sq_norm_quadratic(a: float, i: int, j: int, n_axis: int) -> float:
    """``||a y^i y^j - delta_ij||_{0,a}^2`` by Gaussian moments."""
    g0 = gaussian_moment(0, a)
    if i == j:
        # a^2 E[y^4] - 2a E[y^2] + E[1] in one axis, other axes integrate to g0
        one = a * a * gaussian_moment(4, a) - 2 * a * gaussian_moment(2, a) + g0
        return one * g0 ** (n_axis - 1) * TWO_PI
    return a * a * gaussian_moment(2, a) ** 2 * g0 ** (n_axis - 2) * TWO_PI


def build_modes(a: float, trunc=(24, 8), n_axis: int = 1, k: int = K_SPHERE) -> ProjectionSet:
    """All explicit zero/unstable modes at weight ``a``.

    Each mode is a single basis element of the Hermite basis orthogonal at
    ``a``, so the fields carry ``basis_weight = a``.
    """
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    if k != 1:
        raise DomainError("only k = 1 is implemented")
    if trunc[0] < 2 or trunc[1] < 1:
        raise DomainError(f"truncation {trunc} too small for the explicit modes")
    zero = (0,) * n_axis
    sa = math.sqrt(a)

    def unit(i):
        e = [0] * n_axis
        e[i] += 1
        return e

    def mk(alpha, m, value):
        return SpectralField.from_modes({(tuple(alpha), m): value}, trunc, n_axis, a)

    modes = []
    s00 = -(math.sqrt(k) / 2) * a ** -1.5
    modes.append(EigenMode((0, 0), (None, None, None), -2 * a, mk(zero, 0, s00), s00))
    for l in (1, 2):
        modes.append(EigenMode((0, 1), (None, None, l), -a, mk(zero, circle_component(l), 1.0), 1.0))
    ny = sq_norm_y(a, n_axis)
    for i in range(n_axis):
        # y_i = h_1(sqrt(a) y_i) / sqrt(a)
        modes.append(EigenMode((1, 0), (i + 1, None, None), -a, mk(unit(i), 0, 1 / (sa * ny)), 1 / ny))
    for i in range(n_axis):
        for l in (1, 2):
            modes.append(EigenMode((1, 1), (i + 1, None, l), 0.0,
                                   mk(unit(i), circle_component(l), 1 / sa), 1.0))
    for i in range(n_axis):
        for j in range(i, n_axis):
            nq = sq_norm_quadratic(a, i, j, n_axis)
            alpha = [0] * n_axis
            alpha[i] += 1
            alpha[j] += 1
            # a y_i^2 - 1 = sqrt(2) h_2;  a y_i y_j = h_1 h_1
            val = math.sqrt(2) if i == j else 1.0
            modes.append(EigenMode((2, 0), (i + 1, j + 1, None), 0.0, mk(alpha, 0, val / nq), 1 / nq))
    return ProjectionSet(tuple(modes), float(a), tuple(trunc), n_axis)


def project(phi: SpectralField, modes: ProjectionSet, label) -> SpectralField:
    """Orthogonal projection onto the span of the modes with ``label``.

    Uses the (pseudo-)inverse Gram matrix of the spanning set, so linear
    dependencies inside a label are harmless.
    """
    group = modes.by_label(label)
    a = modes.a
    fs = [rebase(m.field, phi.basis_weight) for m in group]
    G = np.array([[inner_product(f, g, a) for g in fs] for f in fs])
    b = np.array([inner_product(f, phi, a) for f in fs])
    coef = np.linalg.pinv(G, rcond=1e-12) @ b
    out = np.zeros_like(phi.coeffs)
    for c, f in zip(coef, fs):
        out = out + c * f.coeffs
    return SpectralField(out, phi.basis_weight)


def project_Q(phi: SpectralField, modes: ProjectionSet) -> SpectralField:
    """``Q phi = phi - sum_label P^label phi``."""
    out = phi
    for lab in LABELS:
        out = out - project(phi, modes, lab)
    return out


def nonpositive_mask(trunc, n_axis) -> np.ndarray:
    return kappa_lattice(trunc, n_axis) <= 0


def propagate_stable(phi: SpectralField, a: float, tau: float, tol: float = 1e-10) -> SpectralField:
    """``exp(-tau L(a)) phi`` on the stable range.

    Raises :class:`PreconditionError` if ``phi`` has a component on a mode
    with non-positive eigenvalue (relative size above ``tol``).
    """
    if tau < 0:
        raise DomainError(f"tau must be non-negative, got {tau}")
    psi = rebase(phi, a)
    kap = kappa_lattice(phi.trunc, phi.n_axis)
    bad = np.abs(psi.coeffs[kap <= 0])
    scale = max(np.abs(psi.coeffs).max(), 1e-300)
    if bad.size and bad.max() > tol * scale:
        raise PreconditionError("field has a component on a zero or unstable mode")
    c = np.where(kap > 0, psi.coeffs * np.exp(-tau * a * kap), 0.0)
    return rebase(SpectralField(c, a), phi.basis_weight)


def smallest_stable_eigenvalue(a: float, trunc, n_axis) -> float:
    kap = kappa_lattice(trunc, n_axis)
    return float(a * kap[kap > 0].min())


def dense_block(a: float, slot: int, trunc=(24, 8), n_axis: int = 1) -> tuple[np.ndarray, float]:
    """Dense matrix of ``L(a)`` restricted to one Fourier storage slot.

    The matrix is assembled column by column from the differential
    expression ``-Delta_y + a y.grad_y - (a/k) d_theta^2 - 2a`` using the
    Hermite differentiation and multiplication-by-``y`` identities in the
    orthonormal basis at weight ``a``; it does not use the eigenvalue
    lattice.  Returns the block and the largest entry that leaked outside
    the slot (zero when the Fourier sectors decouple, as they should).
    """
    from .weighted_space import fourier_derivative_matrix, hermite_derivative_matrix
    N, M = trunc
    nh = (N + 1) ** n_axis
    if nh > MAX_DENSE_DIM:
        raise ResourceError(f"dense block of size {nh} exceeds limit {MAX_DENSE_DIM}")
    D = hermite_derivative_matrix(N, a)
    # y h_n(sqrt(a) y) = (sqrt(n+1) h_{n+1} + sqrt(n) h_{n-1}) / sqrt(a)
    Y = np.zeros((N + 2, N + 1))
    n = np.arange(N + 1)
    Y[n + 1, n] = np.sqrt(n + 1) / math.sqrt(a)
    Y[n[1:] - 1, n[1:]] = np.sqrt(n[1:]) / math.sqrt(a)
    A1 = -(D @ D) + a * (Y @ D)[: N + 1]
    T2 = -(a / K_SPHERE) * (fourier_derivative_matrix(M) @ fourier_derivative_matrix(M))
    leak = float(np.abs(np.delete(T2[:, slot], slot)).max()) if M > 0 else 0.0
    I1 = np.eye(N + 1)
    B = (T2[slot, slot] - 2 * a) * np.eye(nh)
    for i in range(n_axis):
        term = np.ones((1, 1))
        for j in range(n_axis):
            term = np.kron(term, A1 if j == i else I1)
        B = B + term
    return B, leak


def dense_spectrum(a: float, trunc=(24, 8), n_axis: int = 1) -> np.ndarray:
    """Sorted eigenvalues of the dense Galerkin matrix of ``L(a)``.

    The orthonormal Hermite basis at weight ``a`` makes every block
    symmetric; blocks are diagonalized independently per Fourier slot.
    """
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    N, M = trunc
    evs = []
    for slot in range(2 * M + 1):
        B, leak = dense_block(a, slot, trunc, n_axis)
        if leak > 1e-9 * max(1.0, np.abs(B).max()):
            raise RuntimeError(f"Fourier slot {slot} couples to others (leak {leak:g})")
        evs.append(np.linalg.eigvalsh(0.5 * (B + B.T)))
    return np.sort(np.concatenate(evs))


def spectrum_table(a: float, trunc=(24, 8), n_axis: int = 1) -> list[tuple[str, int, float, str]]:
    """Rows ``(alpha, m, eigenvalue, class)`` sorted by eigenvalue."""
    kap = kappa_lattice(trunc, n_axis)
    signed = fourier_signed_modes(trunc[1])
    rows = []
    for idx in np.ndindex(kap.shape):
        lam = a * kap[idx]
        cls = "unstable" if kap[idx] < 0 else ("zero" if kap[idx] == 0 else "stable")
        rows.append(("-".join(str(v) for v in idx[:-1]), int(signed[idx[-1]]), float(lam), cls))
    rows.sort(key=lambda r: (r[2], r[0], abs(r[1]), -r[1]))
    return rows


def mode_residual(mode: EigenMode, a: float) -> float:
    r = apply_L(mode.field, a) - mode.eigenvalue * mode.field
    return norm0(r, a)
