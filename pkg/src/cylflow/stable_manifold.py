"""Fixed-point iteration for the stable manifold and the correction map Phi."""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, PreconditionError, SamplingError, ShapeError
from .frozen_solver import (
    CorrectionCoeffs,
    FlowPath,
    FrozenProblem,
    correction_field,
    japanese,
    membership_check,
    solve_frozen,
    tau_grid,
    xi_norms,
)
from .modulation import K, SymmetryParams, _slots, s00
from .nonlinearity import N_coeffs
from .spectral_operator import kappa_lattice
from .weighted_space import (
    SpectralField,
    make_grid,
    pivot_norm,
    rebase,
    rebase_batch,
    sobolev_norm,
    sobolev_sq_coeffs,
    values_from_coeffs,
)
from ._random import random_field

log = logging.getLogger(__name__)

__all__ = [
    "CorrectionCoeffs", "SeedFunction", "sample_seed", "path_norm", "psi", "fixed_point",
    "FixedPointResult", "phi", "self_consistency_residual", "decay_exponent",
]


@dataclass(frozen=True, eq=False)
class SeedFunction:
    """Initial perturbation ``eta0`` in the stable sector at ``a0``."""

    eta0: SpectralField
    delta: float
    a0: float

    def digest(self) -> str:
        """SHA-256 of the little-endian coefficient bytes (reproducibility pin)."""
        return hashlib.sha256(self.eta0.coeffs.astype("<f8").tobytes()).hexdigest()

    def scaled(self, eps: float) -> "SeedFunction":
        return SeedFunction(self.eta0 * eps, self.delta, self.a0)


def stable_sector_projection(phi: SpectralField, a0: float) -> SpectralField:
    """Remove every component on a mode with non-positive eigenvalue at ``a0``.

    Those modes are single basis elements of the a0-basis, so zeroing their
    coefficients is the orthogonal projection.
    """
    c = rebase(phi, a0).coeffs.copy()
    c[kappa_lattice(phi.trunc, phi.n_axis) <= 0] = 0.0
    return rebase(SpectralField(c, a0), phi.basis_weight)


def sample_seed(rng: np.random.Generator, delta: float, a0: float | None = None, trunc=(24, 8),
                n_axis: int = 1, degree: int = 4, max_m: int = 2, target: float | None = None,
                c: float = 1.0, s: int = 2, radius_margin: float = 0.5,
                max_tries: int = 200) -> SeedFunction:
    """Draw ``eta0`` satisfying the smallness, pivot and graph conditions.

    Random low-degree coefficients are projected onto the stable sector,
    rescaled to ``||eta0||_s = target`` (default ``0.4 delta``), then
    accepted if ``||eta0||_{s,b}^2 <= c/2`` and
    ``sqrt(k/a0) + eta0 >= radius_margin sqrt(k/a0)`` at every node of the
    padded collocation grid.
    """
    if a0 is None:
        a0 = 0.5 + 2 * delta
    if target is None:
        target = 0.4 * delta
    if not 0 < target < delta:
        raise PreconditionError(f"target norm {target} must lie in (0, delta)")
    r0 = math.sqrt(K / a0)
    grid = make_grid(trunc, n_axis, 0.5, padded=True)
    for _ in range(max_tries):
        f = stable_sector_projection(random_field(rng, trunc, n_axis, degree, max_m), a0)
        nf = sobolev_norm(f, 0.5, s)
        if nf == 0:
            continue
        eta = f * (target / nf)
        if pivot_norm(eta, delta, s) > c / 2:
            continue
        vals = values_from_coeffs(eta.coeffs, 0.5, grid)
        if np.min(r0 + vals) < radius_margin * r0:
            continue
        return SeedFunction(eta, delta, a0)
    raise SamplingError(f"no admissible seed after {max_tries} draws")


def path_norm(U1: FlowPath, U0: FlowPath, c0: float = 10.0, s: int = 2) -> float:
    """``sup_tau ( <tau>|sigma1 - sigma0| / c0 + <tau>^2 ||xi1 - xi0||_s )``."""
    if U1.taus.shape != U0.taus.shape or not np.allclose(U1.taus, U0.taus, rtol=0, atol=1e-12):
        raise ShapeError("paths live on different tau grids")
    if U1.basis_weight != U0.basis_weight:
        raise ShapeError("paths use different basis weights")
    jt = japanese(U1.taus)
    ds = np.linalg.norm(U1.sigma_matrix() - U0.sigma_matrix(), axis=1)
    dx = np.sqrt(sobolev_sq_coeffs(U1.xi - U0.xi, U1.basis_weight, 0.5, s, U1.n_axis))
    return float(np.max(jt * ds / c0 + jt**2 * dx))


def psi(U0: FlowPath, seed: SeedFunction, check: bool = True, c0: float = 10.0,
        c: float = 1.0) -> tuple[FlowPath, CorrectionCoeffs]:
    """One application of the frozen-coefficient map."""
    if check:
        rep = membership_check(U0, seed.delta, c0, c)
        if not rep.passed:
            raise PreconditionError(f"frozen path outside the admissible class at {rep.first_violation}")
    sol = solve_frozen(FrozenProblem(U0, seed.eta0, delta=seed.delta))
    return sol.path, sol.coeffs


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    path: FlowPath
    coeffs: CorrectionCoeffs
    ratios: np.ndarray
    differences: np.ndarray
    coeff_history: list
    converged: bool
    delta: float

    @property
    def iterations(self) -> int:
        return len(self.differences)

    @property
    def ratio_bound(self) -> float:
        """``delta^{1/2}`` halved: the contraction bound with a factor-2 headroom."""
        return 0.5 * math.sqrt(self.delta)

    @property
    def ratios_within_bound(self) -> bool:
        return bool(np.all(self.ratios <= self.ratio_bound))


def fixed_point(seed: SeedFunction, tol: float = 1e-9, max_iter: int = 40,
                taus: np.ndarray | None = None, trunc=None, c0: float = 10.0,
                s: int = 2) -> FixedPointResult:
    """Iterate ``U <- psi(U, eta0)`` from the static path until the path norm of an
    update drops below ``tol``.

    Raises :class:`DivergenceError` when an update grows twice or the
    iteration budget runs out.
    """
    if taus is None:
        taus = tau_grid()
    if trunc is None:
        trunc = seed.eta0.trunc
    n = seed.eta0.n_axis
    U = FlowPath.static(SymmetryParams.identity(seed.a0, n), taus, trunc, seed.eta0.basis_weight)
    diffs, ratios, hist = [], [], []
    growth = 0
    for it in range(max_iter):
        U1, cc = psi(U, seed, check=False)
        d = path_norm(U1, U, c0, s)
        hist.append(cc)
        if diffs:
            r = d / diffs[-1] if diffs[-1] > 0 else 0.0
            ratios.append(r)
            if r >= 1:
                growth += 1
                if growth >= 2:
                    raise DivergenceError(f"no contraction at delta = {seed.delta}: ratios {ratios}")
        diffs.append(d)
        log.info("iteration %d: update norm %.3e", it + 1, d)
        U = U1
        if d < tol:
            return FixedPointResult(U, cc, np.array(ratios), np.array(diffs), hist, True, seed.delta)
    raise DivergenceError(f"no convergence in {max_iter} iterations at delta = {seed.delta}; "
                          f"last update {diffs[-1]:.3e}")


def phi(seed: SeedFunction, **kw) -> tuple[CorrectionCoeffs, SpectralField, FixedPointResult]:
    """Correction ``Phi(eta0) = beta_i Sigma10_i + gamma_ij Sigma20_ij`` at ``a0``."""
    if not np.any(seed.eta0.coeffs):
        n = seed.eta0.n_axis
        zero = CorrectionCoeffs.zero(n)
        field0 = SpectralField.zeros(seed.eta0.trunc, n, seed.eta0.basis_weight)
        return zero, field0, None
    res = fixed_point(seed, **kw)
    f = correction_field(res.coeffs, seed.a0, seed.eta0.trunc, seed.eta0.n_axis,
                         seed.eta0.basis_weight)
    return res.coeffs, f, res


def graph_condition_after(seed: SeedFunction, correction: SpectralField) -> float:
    """Smallest value of ``sqrt(k/a0) + eta0 + Phi`` over the padded grid."""
    g = make_grid(seed.eta0.trunc, seed.eta0.n_axis, seed.eta0.basis_weight, padded=True)
    tot = seed.eta0 + correction
    return float(math.sqrt(K / seed.a0) + values_from_coeffs(tot.coeffs, tot.basis_weight, g).min())


# ---------------------------------------------------------------------------
# verification helpers
# ---------------------------------------------------------------------------

def _dW_coeffs(path: FlowPath) -> np.ndarray:
    n = path.n_axis
    w = path.basis_weight
    out = np.zeros_like(path.xi)
    s0, s0l, sel = _slots(n, path.trunc[1])
    out[(slice(None),) + s0] = path.da * s00(path.a)
    for l in range(2):
        out[(slice(None),) + s0l[l]] = path.dz[:, l] / path.lam
        for j in range(n):
            out[(slice(None),) + sel[l][j]] = path.dg[:, l, j] / math.sqrt(w)
    return out


def _L_coeffs(path: FlowPath) -> np.ndarray:
    n = path.n_axis
    kap = kappa_lattice(path.trunc, n)
    ca = rebase_batch(path.xi, path.basis_weight, path.a, n)
    la = ca * kap * path.a.reshape((-1,) + (1,) * (n + 1))
    return rebase_batch(la, path.a, path.basis_weight, n)


def self_consistency_residual(path: FlowPath, s: int = 2, finite_difference: bool = False) -> np.ndarray:
    """``||xi_t + L(a) xi + N(a, xi) + dW(sigma) sigma_t||_{s-2}`` per node.

    Uses the stored exact ``xi_t`` unless ``finite_difference`` is set, in
    which case a second-order difference of the stored ``xi`` is used.
    """
    n = path.n_axis
    if finite_difference or path.xi_dot is None:
        xdot = np.gradient(path.xi, path.taus, axis=0, edge_order=2)
    else:
        xdot = path.xi_dot
    Nc = N_coeffs(path.a, path.xi, path.basis_weight, n)
    R = xdot + _L_coeffs(path) + Nc + _dW_coeffs(path)
    return np.sqrt(sobolev_sq_coeffs(R, path.basis_weight, 0.5, s - 2, n))


def decay_exponent(taus: np.ndarray, values: np.ndarray, lo: float = 2.0, hi: float = 30.0) -> float:
    """Least-squares exponent ``p`` in ``values ~ C <tau>^{-p}`` over ``[lo, hi]``."""
    sel = (taus >= lo) & (taus <= hi) & (values > 0)
    if sel.sum() < 2:
        return float("inf") if np.all(values[(taus >= lo) & (taus <= hi)] == 0) else float("nan")
    slope, _ = np.polyfit(np.log(japanese(taus[sel])), np.log(values[sel]), 1)
    return float(-slope)


def loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope and R^2 of ``log y`` against ``log x``."""
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    pred = slope * lx + icpt
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    return float(slope), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
