"""Gaussian-weighted function spaces on R^n_axis x S^1.

Fields are expanded in a tensor basis of normalized probabilists' Hermite
functions in each axial variable and a real Fourier basis on the circle::

    phi(y, theta) = sum_{alpha, j} c[alpha, j] * prod_i h_{alpha_i}(sqrt(w) y_i) * e_j(theta)

where ``h_n = He_n / sqrt(n!)`` and ``w`` is the *basis weight*.  At weight
``a == w`` the Hermite factors are orthogonal with
``int h_n(sqrt(a) y)^2 exp(-a y^2/2) dy = sqrt(2 pi / a)``.

Fourier layout along the last axis (length ``2M+1``): index 0 is the constant,
index ``m`` (1..M) is ``cos(m theta)`` and index ``M+m`` is ``sin(m theta)``.
A *signed* Fourier index uses ``m > 0`` for cosines and ``m < 0`` for sines,
so ``omega^1 = cos`` is signed index +1 and ``omega^2 = sin`` is -1.

Inner products at a weight ``a`` different from the basis weight use exact
Gauss-Hermite quadrature for weight ``a`` (a Gram matrix per axis), never a
truncated re-expansion.
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import hermite_e

from .errors import DomainError, PreconditionError, ShapeError

TWO_PI = 2.0 * math.pi
DEFAULT_BASIS_WEIGHT = 0.5
DEFAULT_TRUNC = (24, 8)


# ---------------------------------------------------------------------------
# one-dimensional building blocks
# ---------------------------------------------------------------------------

def hermite_functions(x: np.ndarray, N: int) -> np.ndarray:
    """Normalized Hermite polynomials ``h_n(x) = He_n(x)/sqrt(n!)``.

    Uses the three-term recurrence
    ``h_{n+1} = (x h_n - sqrt(n) h_{n-1}) / sqrt(n+1)``, which avoids the
    factorial growth of the monic polynomials.

    Returns an array of shape ``x.shape + (N+1,)``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (N + 1,))
    out[..., 0] = 1.0
    if N >= 1:
        out[..., 1] = x
    for n in range(1, N):
        out[..., n + 1] = (x * out[..., n] - math.sqrt(n) * out[..., n - 1]) / math.sqrt(n + 1)
    return out


@lru_cache(maxsize=64)
def gauss_hermite(Q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for the weight ``exp(-x^2/2)`` (weights sum to sqrt(2 pi))."""
    x, w = hermite_e.hermegauss(Q)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=256)
def rescale_matrix(N: int, r: float) -> np.ndarray:
    """Matrix ``T`` with ``h_n(r x) = sum_m T[m, n] h_m(x)`` for ``n <= N``.

    Follows from the multiplication theorem for Hermite polynomials::

        He_n(r x) = sum_j n!/(j!(n-2j)!) r^(n-2j) ((r^2-1)/2)^j He_{n-2j}(x)

    The matrix is upper triangular, so re-expansion is exact.
    """
    T = np.zeros((N + 1, N + 1))
    q = 0.5 * (r * r - 1.0)
    lg = [math.lgamma(n + 1) for n in range(N + 1)]
    for n in range(N + 1):
        for j in range(n // 2 + 1):
            m = n - 2 * j
            coef = math.exp(0.5 * lg[n] - lg[j] - 0.5 * lg[m])
            T[m, n] = coef * r**m * (q**j if j else 1.0)
    T.setflags(write=False)
    return T


@lru_cache(maxsize=256)
def gram_matrix(N: int, w1: float, w2: float, a: float) -> np.ndarray:
    """``G[n, m] = int h_n(sqrt(w1) y) h_m(sqrt(w2) y) exp(-a y^2/2) dy``.

    Computed with an (N+2)-point Gauss rule for weight ``a``, exact since the
    integrand is a polynomial of degree ``2N`` times that weight.
    """
    if a <= 0:
        raise DomainError(f"weight a must be positive, got {a}")
    x, wq = gauss_hermite(N + 2)
    y = x / math.sqrt(a)
    H1 = hermite_functions(math.sqrt(w1) * y, N)
    H2 = H1 if w2 == w1 else hermite_functions(math.sqrt(w2) * y, N)
    G = (H1 * (wq / math.sqrt(a))[:, None]).T @ H2
    G.setflags(write=False)
    return G


def fourier_norms(M: int) -> np.ndarray:
    """Squared L^2(S^1) norms of the real Fourier basis: 2 pi, then pi."""
    out = np.full(2 * M + 1, math.pi)
    out[0] = TWO_PI
    return out


def fourier_signed_modes(M: int) -> np.ndarray:
    """Signed index per storage slot: ``[0, 1..M, -1..-M]``."""
    return np.concatenate([[0], np.arange(1, M + 1), -np.arange(1, M + 1)]).astype(int)


def fourier_index(m: int, M: int) -> int:
    """Storage slot of signed Fourier index ``m`` (``m < 0`` means sine)."""
    if abs(m) > M:
        raise ShapeError(f"Fourier index {m} exceeds truncation {M}")
    return m if m >= 0 else M - m


def fourier_matrix(theta: np.ndarray, M: int) -> np.ndarray:
    """Values of the real Fourier basis at ``theta``; shape ``(len, 2M+1)``."""
    theta = np.asarray(theta, dtype=float)
    m = np.arange(1, M + 1)
    E = np.empty(theta.shape + (2 * M + 1,))
    E[..., 0] = 1.0
    E[..., 1:M + 1] = np.cos(theta[..., None] * m)
    E[..., M + 1:] = np.sin(theta[..., None] * m)
    return E


def hermite_derivative_matrix(N: int, w: float) -> np.ndarray:
    """d/dy acting on coefficients: ``d/dy h_n(sqrt(w) y) = sqrt(w n) h_{n-1}``."""
    D = np.zeros((N + 1, N + 1))
    n = np.arange(1, N + 1)
    D[n - 1, n] = np.sqrt(w * n)
    return D


def fourier_derivative_matrix(M: int) -> np.ndarray:
    """d/dtheta on real Fourier coefficients."""
    D = np.zeros((2 * M + 1, 2 * M + 1))
    for m in range(1, M + 1):
        D[m, M + m] = m       # sin -> m cos
        D[M + m, m] = -m      # cos -> -m sin
    return D


def apply_axes(coeffs: np.ndarray, mats: Sequence[np.ndarray | None], n_axis: int) -> np.ndarray:
    """Apply one matrix per trailing tensor axis (Hermite axes, then Fourier).

    ``mats`` has ``n_axis + 1`` entries; ``None`` leaves that axis alone.
    Leading (batch) axes of ``coeffs`` are preserved.
    """
    out = coeffs
    base = coeffs.ndim - (n_axis + 1)
    for i, mat in enumerate(mats):
        if mat is None:
            continue
        ax = base + i
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [ax])), 0, ax)
    return out


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceParams:
    """Parameters of the space X^s(a) over R^n_axis x S^k (k = 1)."""

    a: float
    s: int = 2
    n_axis: int = 1
    k: int = 1

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a}")
        if self.s < 0 or int(self.s) != self.s:
            raise DomainError(f"s must be a non-negative integer, got {self.s}")
        if self.n_axis < 1:
            raise DomainError(f"n_axis must be >= 1, got {self.n_axis}")
        if self.k != 1:
            raise DomainError("only k = 1 (circle cross-section) is implemented")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients of a function on R^n_axis x S^1.

    ``coeffs`` has shape ``(N+1,)*n_axis + (2M+1,)``.  The array is copied and
    made read-only on construction.
    """

    coeffs: np.ndarray
    basis_weight: float = DEFAULT_BASIS_WEIGHT

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, copy=True)
        if c.ndim < 2:
            raise ShapeError("coeffs needs at least one Hermite axis and the Fourier axis")
        if len(set(c.shape[:-1])) != 1:
            raise ShapeError(f"Hermite axes must share a truncation, got {c.shape}")
        if c.shape[-1] % 2 != 1:
            raise ShapeError(f"Fourier axis must have odd length 2M+1, got {c.shape[-1]}")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        if not self.basis_weight > 0:
            raise DomainError(f"basis_weight must be positive, got {self.basis_weight}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "basis_weight", float(self.basis_weight))

    # -- shape information -------------------------------------------------
    @property
    def n_axis(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def trunc(self) -> tuple[int, int]:
        return self.coeffs.shape[0] - 1, (self.coeffs.shape[-1] - 1) // 2

    # -- constructors --------------------------------------------------------
    @classmethod
    def zeros(cls, trunc=DEFAULT_TRUNC, n_axis=1, basis_weight=DEFAULT_BASIS_WEIGHT):
        N, M = trunc
        return cls(np.zeros((N + 1,) * n_axis + (2 * M + 1,)), basis_weight)

    @classmethod
    def from_modes(cls, modes: dict, trunc=DEFAULT_TRUNC, n_axis=1,
                   basis_weight=DEFAULT_BASIS_WEIGHT):
        """Build from ``{(alpha_tuple, signed_m): value}``."""
        N, M = trunc
        c = np.zeros((N + 1,) * n_axis + (2 * M + 1,))
        for (alpha, m), val in modes.items():
            alpha = tuple(alpha)
            if len(alpha) != n_axis or max(alpha) > N:
                raise ShapeError(f"multi-index {alpha} outside truncation")
            c[alpha + (fourier_index(m, M),)] += val
        return cls(c, basis_weight)

    @classmethod
    def constant(cls, value, trunc=DEFAULT_TRUNC, n_axis=1, basis_weight=DEFAULT_BASIS_WEIGHT):
        return cls.from_modes({((0,) * n_axis, 0): value}, trunc, n_axis, basis_weight)

    # -- algebra -------------------------------------------------------------
    def _aligned(self, other: "SpectralField") -> np.ndarray:
        check_same_shape(self, other)
        if other.basis_weight == self.basis_weight:
            return other.coeffs
        return rebase(other, self.basis_weight).coeffs

    def __add__(self, other):
        if isinstance(other, SpectralField):
            return SpectralField(self.coeffs + self._aligned(other), self.basis_weight)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            return SpectralField(self.coeffs - self._aligned(other), self.basis_weight)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return SpectralField(self.coeffs * float(scalar), self.basis_weight)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(-self.coeffs, self.basis_weight)

    def coefficient(self, alpha: Sequence[int], m: int) -> float:
        return float(self.coeffs[tuple(alpha) + (fourier_index(m, self.trunc[1]),)])


def check_same_shape(phi: SpectralField, psi: SpectralField) -> None:
    if phi.coeffs.shape != psi.coeffs.shape:
        raise ShapeError(f"truncation mismatch: {phi.coeffs.shape} vs {psi.coeffs.shape}")


def _check_weight(a: float) -> float:
    if not (np.isfinite(a) and a > 0):
        raise DomainError(f"weight a must be positive, got {a}")
    return float(a)


def rebase_coeffs(coeffs: np.ndarray, w_old: float, w_new: float, n_axis: int) -> np.ndarray:
    """Re-expand coefficients from basis weight ``w_old`` to ``w_new`` (exact)."""
    if w_old == w_new:
        return coeffs
    N = coeffs.shape[-2] - 1
    T = rescale_matrix(N, math.sqrt(w_old / w_new))
    return apply_axes(coeffs, [T] * n_axis + [None], n_axis)


def rebase(phi: SpectralField, new_weight: float) -> SpectralField:
    """Same function, expanded in the Hermite basis orthogonal at ``new_weight``."""
    _check_weight(new_weight)
    if new_weight == phi.basis_weight:
        return phi
    return SpectralField(rebase_coeffs(phi.coeffs, phi.basis_weight, new_weight, phi.n_axis),
                         new_weight)


# ---------------------------------------------------------------------------
# inner products and norms (array level, batch friendly)
# ---------------------------------------------------------------------------

def inner_coeffs(c1: np.ndarray, w1: float, c2: np.ndarray, w2: float, a: float,
                 n_axis: int) -> np.ndarray:
    """Weighted inner product over the trailing ``n_axis+1`` axes."""
    N = c1.shape[-2]
    M = (c1.shape[-1] - 1) // 2
    G = gram_matrix(N - 1, w1, w2, a)
    Gc2 = apply_axes(c2, [G] * n_axis + [None], n_axis)
    prod = c1 * Gc2 * fourier_norms(M)
    return prod.reshape(prod.shape[: prod.ndim - n_axis - 1] + (-1,)).sum(axis=-1)


def derivative_multi_indices(n_axis: int, s: int) -> list[tuple[int, ...]]:
    """All (d_y1, ..., d_yn, d_theta) with total order <= s."""
    return [d for d in itertools.product(range(s + 1), repeat=n_axis + 1) if sum(d) <= s]


def derivative_coeffs(coeffs: np.ndarray, w: float, orders: Sequence[int], n_axis: int) -> np.ndarray:
    """Apply ``prod_i d^{orders[i]}`` (last entry is the theta order)."""
    N = coeffs.shape[-2] - 1
    M = (coeffs.shape[-1] - 1) // 2
    Dy = hermite_derivative_matrix(N, w)
    Dt = fourier_derivative_matrix(M)
    mats = []
    for i, o in enumerate(orders):
        base = Dt if i == n_axis else Dy
        mats.append(np.linalg.matrix_power(base, o) if o else None)
    return apply_axes(coeffs, mats, n_axis)


def sobolev_sq_coeffs(coeffs: np.ndarray, w: float, a: float, s: int, n_axis: int) -> np.ndarray:
    """Squared X^s(a) norm over the trailing axes (batch friendly)."""
    total = 0.0
    for d in derivative_multi_indices(n_axis, s):
        dc = derivative_coeffs(coeffs, w, d, n_axis)
        total = total + inner_coeffs(dc, w, dc, w, a, n_axis)
    return np.maximum(total, 0.0)


def inner_product(phi: SpectralField, psi: SpectralField, a: float) -> float:
    """``int phi psi exp(-a|y|^2/2) dy dtheta`` by exact Gauss quadrature."""
    check_same_shape(phi, psi)
    a = _check_weight(a)
    return float(inner_coeffs(phi.coeffs, phi.basis_weight, psi.coeffs, psi.basis_weight,
                              a, phi.n_axis))


def norm0(phi: SpectralField, a: float) -> float:
    return math.sqrt(max(inner_product(phi, phi, a), 0.0))


def sobolev_norm(phi: SpectralField, a: float, s: int = 2) -> float:
    """``(sum_{|alpha|<=s} ||d^alpha phi||_{0,a}^2)^{1/2}``.

    Derivatives range over the axial variables and the angle, computed with
    exact differentiation matrices.
    """
    a = _check_weight(a)
    if s < 0:
        raise DomainError(f"Sobolev order must be >= 0, got {s}")
    if s > phi.trunc[0] + phi.trunc[1]:
        raise DomainError(f"order {s} exceeds what truncation {phi.trunc} resolves")
    return math.sqrt(float(sobolev_sq_coeffs(phi.coeffs, phi.basis_weight, a, s, phi.n_axis)))


def pivot_weight(delta: float) -> float:
    if not 0 < delta < 0.125:
        raise DomainError(f"pivot needs 0 < delta < 1/8, got {delta}")
    return 0.5 - 4.0 * delta


def pivot_norm(phi: SpectralField, delta: float, s: int = 2) -> float:
    """Squared norm ``||phi||_{s,b}^2`` at the pivot weight ``b = 1/2 - 4 delta``."""
    b = pivot_weight(delta)
    return sobolev_norm(phi, b, s) ** 2


def interpolation_check(phi: SpectralField, a: float, c: float, delta: float,
                        s: int = 2) -> tuple[float, float]:
    """Return ``(||phi||_{s,1/2}, c^(1/6) ||phi||_{s,a}^(2/3))``.

    Hoelder's inequality with the pivot bound ``||phi||_{s,b}^2 <= c`` gives
    ``lhs <= rhs`` whenever ``0 <= a - 1/2 <= 2 delta``.
    """
    tol = 1e-12
    if not (-tol <= a - 0.5 <= 2 * delta + tol):
        raise DomainError(f"need 0 <= a - 1/2 <= 2 delta, got a={a}, delta={delta}")
    if c <= 0:
        raise DomainError(f"pivot bound c must be positive, got {c}")
    piv = pivot_norm(phi, delta, s)
    if piv > c * (1 + 1e-12):
        raise DomainError(f"pivot condition violated: {piv} > {c}")
    lhs = sobolev_norm(phi, 0.5, s)
    g = sobolev_norm(phi, a, s)
    return lhs, c ** (1.0 / 6.0) * g ** (2.0 / 3.0)


# ---------------------------------------------------------------------------
# collocation grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor Gauss-Hermite x equispaced-angle grid.

    The Hermite rule is the Gauss rule for ``exp(-w y^2/2)`` with ``Q`` nodes;
    the angular rule is the trapezoid rule with ``P`` points.  With
    ``padded=True`` the node counts follow the 3/2 rule so that projecting a
    product of two band-limited fields back onto the truncation is exact.
    """

    trunc: tuple[int, int]
    n_axis: int
    weight: float
    padded: bool
    y_nodes: np.ndarray
    y_weights: np.ndarray
    theta: np.ndarray
    theta_weights: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return (len(self.y_nodes),) * self.n_axis + (len(self.theta),)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays ``[y_1, ..., y_n, theta]``."""
        arrs = [self.y_nodes] * self.n_axis + [self.theta]
        return list(np.meshgrid(*arrs, indexing="ij", sparse=True))

    def hermite_eval(self, basis_weight: float) -> np.ndarray:
        return _hermite_eval(self.trunc[0], self.weight, self.padded, basis_weight)

    def fourier_eval(self) -> np.ndarray:
        return fourier_matrix(self.theta, self.trunc[1])

    def quadrature_weights(self, a: float | None = None) -> np.ndarray:
        """Full tensor weights for ``exp(-a|y|^2/2) dy dtheta`` (default a = grid weight)."""
        wy = self.y_weights
        if a is not None and a != self.weight:
            wy = wy * np.exp(-(a - self.weight) * self.y_nodes**2 / 2)
        W = self.theta_weights
        for _ in range(self.n_axis):
            W = np.multiply.outer(wy, W)
        return W


@lru_cache(maxsize=64)
def _hermite_eval(N, grid_weight, padded, basis_weight):
    g = make_grid((N, 0), 1, grid_weight, padded)
    H = hermite_functions(math.sqrt(basis_weight) * g.y_nodes, N)
    H.setflags(write=False)
    return H


@lru_cache(maxsize=64)
def make_grid(trunc=DEFAULT_TRUNC, n_axis: int = 1, weight: float = DEFAULT_BASIS_WEIGHT,
              padded: bool = False) -> Grid:
    N, M = trunc
    _check_weight(weight)
    if padded:
        Q = (3 * N + 2) // 2 + 1
        P = 3 * M + 1
    else:
        Q = N + 1
        P = 2 * M + 1
    x, w = gauss_hermite(Q)
    y = x / math.sqrt(weight)
    wy = w / math.sqrt(weight)
    theta = TWO_PI * np.arange(P) / P
    tw = np.full(P, TWO_PI / P)
    for arr in (y, wy, theta, tw):
        arr.setflags(write=False)
    return Grid(tuple(trunc), n_axis, float(weight), padded, y, wy, theta, tw)


def values_from_coeffs(coeffs: np.ndarray, basis_weight: float, grid: Grid) -> np.ndarray:
    """Evaluate (batched) coefficients on ``grid``."""
    H = grid.hermite_eval(basis_weight)
    E = grid.fourier_eval()
    return apply_axes(coeffs, [H] * grid.n_axis + [E], grid.n_axis)


@lru_cache(maxsize=64)
def _projection_mats(N, M, grid_weight, padded, n_axis):
    g = make_grid((N, M), n_axis, grid_weight, padded)
    H = g.hermite_eval(grid_weight)
    # c_n = int f h_n(sqrt(w) y) e^{-w y^2/2} dy / sqrt(2 pi / w)
    Hp = (H * g.y_weights[:, None]).T / math.sqrt(TWO_PI / grid_weight)
    E = g.fourier_eval()
    Ep = (E * g.theta_weights[:, None]).T / fourier_norms(M)[:, None]
    Hp.setflags(write=False)
    Ep.setflags(write=False)
    return Hp, Ep


def coeffs_from_values(values: np.ndarray, grid: Grid, basis_weight: float | None = None) -> np.ndarray:
    """Discrete Galerkin projection of grid values onto the truncated basis.

    Exact (up to rounding) for band-limited data.  Content beyond the
    truncation is aliased on the unpadded grid and dropped on the padded one.
    """
    Hp, Ep = _projection_mats(grid.trunc[0], grid.trunc[1], grid.weight, grid.padded, grid.n_axis)
    c = apply_axes(values, [Hp] * grid.n_axis + [Ep], grid.n_axis)
    if basis_weight is not None and basis_weight != grid.weight:
        c = rebase_coeffs(c, grid.weight, basis_weight, grid.n_axis)
    return c


def to_values(phi: SpectralField, grid: Grid | None = None) -> np.ndarray:
    """Values of ``phi`` at the grid nodes (default grid at the basis weight)."""
    if grid is None:
        grid = make_grid(phi.trunc, phi.n_axis, phi.basis_weight)
    if grid.trunc != phi.trunc or grid.n_axis != phi.n_axis:
        raise ShapeError(f"grid {grid.trunc}/{grid.n_axis} vs field {phi.trunc}/{phi.n_axis}")
    return values_from_coeffs(phi.coeffs, phi.basis_weight, grid)


def from_values(values: np.ndarray, grid: Grid, basis_weight: float | None = None) -> SpectralField:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ShapeError(f"values shape {values.shape} does not match grid {grid.shape}")
    w = grid.weight if basis_weight is None else basis_weight
    return SpectralField(coeffs_from_values(values, grid, w), w)


def gaussian_moment(p: int, a: float) -> float:
    """``int y^p exp(-a y^2/2) dy`` over the real line."""
    if p % 2:
        return 0.0
    # (p-1)!! * a^{-p/2} * sqrt(2 pi / a)
    dfact = 1.0
    for q in range(p - 1, 0, -2):
        dfact *= q
    return dfact * a ** (-p / 2) * math.sqrt(TWO_PI / a)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_MAGIC = b"CYLF"
_HEADER = struct.Struct("<4sIIIId")   # magic, version, n_axis, N, M, basis_weight


def field_to_dict(phi: SpectralField) -> dict:
    return {
        "trunc": list(phi.trunc),
        "n_axis": phi.n_axis,
        "basis_weight": phi.basis_weight,
        "coeffs": phi.coeffs.ravel(order="C").tolist(),
    }


def field_from_dict(d: dict) -> SpectralField:
    N, M = (int(t) for t in d["trunc"])
    n_axis = int(d.get("n_axis", 1))
    c = np.asarray(d["coeffs"], dtype=float)
    shape = (N + 1,) * n_axis + (2 * M + 1,)
    if c.size != math.prod(shape):
        raise ShapeError(f"{c.size} coefficients do not fit shape {shape}")
    return SpectralField(c.reshape(shape), float(d["basis_weight"]))


def field_to_json(phi: SpectralField) -> str:
    return json.dumps(field_to_dict(phi))


def field_from_json(text: str) -> SpectralField:
    return field_from_dict(json.loads(text))


def field_to_bytes(phi: SpectralField) -> bytes:
    N, M = phi.trunc
    head = _HEADER.pack(_MAGIC, 1, phi.n_axis, N, M, phi.basis_weight)
    return head + phi.coeffs.astype("<f8").tobytes(order="C")


def field_from_bytes(buf: bytes) -> SpectralField:
    magic, version, n_axis, N, M, w = _HEADER.unpack_from(buf, 0)
    if magic != _MAGIC or version != 1:
        raise ShapeError("not a field file (bad magic or version)")
    shape = (N + 1,) * n_axis + (2 * M + 1,)
    data = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size)
    if data.size != math.prod(shape):
        raise ShapeError(f"payload has {data.size} values, expected {math.prod(shape)}")
    return SpectralField(data.reshape(shape).astype(float), w)


def multi_indices(N: int, n_axis: int) -> Iterable[tuple[int, ...]]:
    return itertools.product(range(N + 1), repeat=n_axis)




@lru_cache(maxsize=16)
def _rescale_parts(N: int):
    m = np.arange(N + 1)[:, None]
    n = np.arange(N + 1)[None, :]
    j2 = n - m
    valid = (j2 >= 0) & (j2 % 2 == 0)
    j = np.where(valid, j2 // 2, 0)
    lg = np.array([math.lgamma(q + 1) for q in range(N + 1)])
    coef = np.where(valid, np.exp(0.5 * lg[n] - lg[j] - 0.5 * lg[np.broadcast_to(m, j.shape)]), 0.0)
    return coef, np.broadcast_to(m, j.shape).astype(float), j.astype(float)


def rescale_matrices(N: int, r: np.ndarray) -> np.ndarray:
    """Vectorized :func:`rescale_matrix` for an array of ratios ``r``; shape ``r.shape + (N+1, N+1)``."""
    coef, mexp, jexp = _rescale_parts(N)
    r = np.asarray(r, dtype=float)[..., None, None]
    q = 0.5 * (r * r - 1.0)
    return coef * r**mexp * np.where(jexp > 0, q**jexp, 1.0)


def rebase_batch(coeffs: np.ndarray, w_old, w_new, n_axis: int) -> np.ndarray:
    """Per-node re-expansion: ``coeffs[i]`` goes from ``w_old[i]`` to ``w_new[i]``.

    ``coeffs`` has one leading batch axis; the weights broadcast against it.
    """
    B = coeffs.shape[0]
    w_old = np.broadcast_to(np.asarray(w_old, dtype=float), (B,))
    w_new = np.broadcast_to(np.asarray(w_new, dtype=float), (B,))
    T = rescale_matrices(coeffs.shape[1] - 1, np.sqrt(w_old / w_new))
    if n_axis == 1:
        return np.einsum("bmn,bnf->bmf", T, coeffs, optimize=True)
    if n_axis == 2:
        tmp = np.einsum("bmn,bnqf->bmqf", T, coeffs, optimize=True)
        return np.einsum("bpq,bmqf->bmpf", T, tmp, optimize=True)
    out = coeffs
    for ax in range(1, n_axis + 1):
        out = np.moveaxis(np.einsum("bmn,bn...->bm...", T, np.moveaxis(out, ax, 1)), 1, ax)
    return out
