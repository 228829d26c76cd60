import math

import numpy as np
import pytest

from cylflow.errors import PreconditionError, SamplingError, ShapeError
from cylflow.frozen_solver import FlowPath, japanese, membership_check, tau_grid, xi_norms
from cylflow.modulation import SymmetryParams
from cylflow.spectral_operator import kappa_lattice
from cylflow.stable_manifold import (
    SeedFunction,
    fixed_point,
    graph_condition_after,
    loglog_fit,
    path_norm,
    phi,
    psi,
    sample_seed,
    self_consistency_residual,
    stable_sector_projection,
)
from cylflow.weighted_space import SpectralField, pivot_norm, rebase, sobolev_norm

from conftest import small_field

DELTA = 0.01
SHORT = tau_grid(20.0, 0.02)
PIN_1 = "69ccb4be679bd4d97940bddc9fa383fd7594b1c44188750fe27332ca260cbddd"


def _static(a, taus=SHORT, trunc=(24, 8)):
    return FlowPath.static(SymmetryParams.identity(a), taus, trunc)


def test_path_norm_examples():
    U = _static(0.52)
    assert path_norm(U, U) == 0.0
    eps = 1e-3
    V = FlowPath(U.taus, U.a + eps, U.z, U.g, U.da, U.dz, U.dg, U.xi)
    assert path_norm(V, U) == pytest.approx(japanese(U.taus[-1]) * eps / 10, rel=1e-12)
    f = SpectralField.from_modes({((3,), 0): eps})
    xi = np.broadcast_to(f.coeffs, U.xi.shape).copy()
    xi *= (japanese(U.taus) ** -2)[:, None, None]
    W = FlowPath(U.taus, U.a, U.z, U.g, U.da, U.dz, U.dg, xi)
    assert path_norm(W, U) == pytest.approx(sobolev_norm(f, 0.5), rel=1e-12)
    with pytest.raises(ShapeError):
        path_norm(_static(0.52, tau_grid(10.0, 0.02)), U)


def test_seed_is_reproducible_and_admissible(seed_default):
    assert seed_default.digest() == PIN_1
    again = sample_seed(np.random.default_rng(42), DELTA)
    assert again.digest() == PIN_1
    eta = seed_default.eta0
    assert sobolev_norm(eta, 0.5) == pytest.approx(0.4 * DELTA, rel=1e-12)
    assert pivot_norm(eta, DELTA) <= 0.5
    c = rebase(eta, seed_default.a0).coeffs
    assert np.max(np.abs(c[kappa_lattice(eta.trunc, 1) <= 0])) <= 1e-10 * np.abs(c).max()


def test_sampling_budget():
    with pytest.raises(SamplingError):
        sample_seed(np.random.default_rng(0), DELTA, radius_margin=2.0, max_tries=3)
    with pytest.raises(PreconditionError):
        sample_seed(np.random.default_rng(0), DELTA, target=2 * DELTA)


def test_stable_sector_projection_idempotent(rng):
    f = small_field(rng)
    p = stable_sector_projection(f, 0.52)
    assert np.allclose(stable_sector_projection(p, 0.52).coeffs, p.coeffs, atol=1e-14)


def test_psi_trivial_seed():
    zero = SeedFunction(SpectralField.zeros(), DELTA, 0.52)
    U, cc = psi(_static(0.52), zero)
    assert not np.any(U.xi) and not np.any(cc.as_vector())
    res = fixed_point(zero, taus=SHORT)
    assert res.converged and res.iterations == 1


def test_psi_rejects_inadmissible_path(seed_default):
    U = _static(0.52)
    bad = FlowPath(U.taus, U.a, U.z, U.g, np.ones_like(U.da), U.dz, U.dg, U.xi)
    with pytest.raises(PreconditionError):
        psi(bad, seed_default)


def test_fixed_point_contracts(fixed_point_default):
    res = fixed_point_default
    assert res.converged
    assert res.ratios_within_bound
    assert membership_check(res.path, DELTA).passed
    # coefficient history is Cauchy
    hist = np.array([c.as_vector() for c in res.coeff_history])
    steps = np.abs(np.diff(hist, axis=0)).max(axis=1)
    assert np.all(steps[1:] <= steps[:-1])


def test_smaller_delta_contracts_faster():
    maxr = []
    for d in (0.02, 0.005):
        s = sample_seed(np.random.default_rng(3), d)
        maxr.append(fixed_point(s, taus=SHORT).ratios.max())
    assert maxr[1] < maxr[0]


def test_self_consistency(fixed_point_default):
    path = fixed_point_default.path
    assert np.max(self_consistency_residual(path)) <= 1e-8
    fd = self_consistency_residual(path, finite_difference=True)
    assert np.max(fd[1:-1]) <= 1e-5 * DELTA


def test_phi_is_quadratic_and_keeps_graph(seed_default):
    eps = np.array([1.0, 0.5, 0.25, 0.125])
    sizes, fields = [], []
    for e in eps:
        cc, f, _ = phi(seed_default.scaled(e), taus=SHORT)
        sizes.append(np.linalg.norm(cc.as_vector()))
        fields.append(f)
    slope, r2 = loglog_fit(eps, np.array(sizes))
    assert slope == pytest.approx(2.0, abs=0.1) and r2 >= 0.99
    assert graph_condition_after(seed_default, fields[0]) > 0
    zc, zf, none = phi(seed_default.scaled(0.0))
    assert none is None and not np.any(zc.as_vector()) and not np.any(zf.coeffs)


def test_phi_lipschitz_quotients_bounded():
    rng = np.random.default_rng(11)
    for _ in range(3):
        s1, s2 = sample_seed(rng, DELTA), sample_seed(rng, DELTA)
        dphi = sobolev_norm(phi(s1, taus=SHORT)[1] - phi(s2, taus=SHORT)[1], 0.5)
        assert dphi <= DELTA * sobolev_norm(s1.eta0 - s2.eta0, 0.5)


def test_phi_lipschitz_quotient_stable_along_a_direction(seed_default):
    # nearby pairs along one direction share the same local derivative
    v = sample_seed(np.random.default_rng(12), DELTA).eta0 * 0.05
    base = phi(seed_default, taus=SHORT)[1]
    consts = []
    for t in (1.0, 0.5, 0.25):
        s1 = SeedFunction(seed_default.eta0 + v * t, DELTA, seed_default.a0)
        d = sobolev_norm(phi(s1, taus=SHORT)[1] - base, 0.5)
        consts.append(d / (DELTA * sobolev_norm(v * t, 0.5)))
    assert max(consts) / min(consts) <= 2.0


def test_xi_decay_on_fixed_point(fixed_point_default):
    path = fixed_point_default.path
    jt = japanese(path.taus)
    assert np.all(xi_norms(path) <= DELTA * jt**-2)
    assert math.isfinite(float(np.max(xi_norms(path))))
