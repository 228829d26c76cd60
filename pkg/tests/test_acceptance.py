"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line through the ``criterion``
fixture; the lines are repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest
from scipy.interpolate import make_interp_spline

from cylflow.frozen_solver import (
    FlowPath,
    FrozenProblem,
    japanese,
    ode_bounded_solve,
    orthogonality_profile,
    solve_frozen,
    tau_grid,
    xi_norms,
)
from cylflow.modulation import SymmetryParams
from cylflow.nonlinearity import expansion_residual, gradient_consistency, cylinder, quadratic_slope
from cylflow.rescaling import (
    build_rescaling,
    reconstruct_flow,
    rescaling_from_path,
    round_trip_error,
    tangent_flow_limit,
)
from cylflow.spectral_operator import build_modes, dense_spectrum, mode_residual
from cylflow.stable_manifold import (
    decay_exponent,
    fixed_point,
    loglog_fit,
    phi,
    sample_seed,
    self_consistency_residual,
)
from cylflow.weighted_space import sobolev_norm

from conftest import small_field

DELTA = 0.01
C0 = 10.0


def test_spectrum(criterion):
    t0 = time.perf_counter()
    worst_ev, worst_res = 0.0, 0.0
    for n in (1, 2):
        a = 0.5 + 2 * DELTA
        ev = dense_spectrum(a, (24, 8), n)
        expected = [-2 * a] + [-a] * (n + 2) + [0.0] * (2 * n + n * (n + 1) // 2)
        worst_ev = max(worst_ev, float(np.max(np.abs(ev[: len(expected)] - expected))))
        gap_ok = ev[len(expected)] > 1e-6
        for m in build_modes(a, (24, 8), n).modes:
            worst_res = max(worst_res, mode_residual(m, a))
    dt = time.perf_counter() - t0
    ok = worst_ev <= 1e-9 and worst_res <= 1e-10 and gap_ok and dt < 5
    criterion("spectrum", ok, f"eigenvalue err {worst_ev:.1e}, mode residual {worst_res:.1e}, {dt:.2f} s")


def test_expansion_identity(criterion):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = max(expansion_residual(0.5 + 2 * DELTA, small_field(rng)) for _ in range(20))
    dt = time.perf_counter() - t0
    criterion("expansion identity", worst <= 1e-8 and dt < 30,
              f"max residual {worst:.2e} over 20 fields, {dt:.2f} s")


def test_gradient_check(criterion):
    rng = np.random.default_rng(77)
    a = 0.5 + 2 * DELTA
    orders = []
    for _ in range(5):
        v = cylinder(a, (24, 8), 1) + small_field(rng)
        _, order = gradient_consistency(v, small_field(rng, norm=0.1), a)
        orders.append(order)
    criterion("gradient check", min(orders) >= 1.9, f"min convergence order {min(orders):.3f}")


def test_quadratic_nonlinearity(criterion):
    a = 0.5 + 2 * DELTA
    modes = build_modes(a, (24, 8), 1)
    xi = small_field(np.random.default_rng(8))
    slopes = {lab: quadratic_slope(a, xi, modes, lab) for lab in ((1, 0), (2, 0))}
    ok = all(abs(s - 2.0) <= 0.05 for s in slopes.values())
    criterion("quadratic nonlinearity", ok, ", ".join(f"{k}: {v:.4f}" for k, v in slopes.items()))


def test_bounded_solution_oracle(criterion):
    taus = tau_grid(40.0, 0.01)
    x0, x = ode_bounded_solve(lambda t: np.ones_like(t), lambda t: np.exp(-2 * t), taus)
    sp = make_interp_spline(taus, x, k=7)
    inner = slice(50, -50)
    res = float(np.max(np.abs(sp.derivative()(taus[inner]) - x[inner] - np.exp(-2 * taus[inner]))))
    err = abs(x0 + 1 / 3)
    criterion("bounded-solution oracle", err <= 1e-10 and res <= 1e-8,
              f"|x0 + 1/3| = {err:.1e}, trajectory residual {res:.1e}")


def test_orthogonality_preservation(criterion, seed_default):
    base = FlowPath.static(SymmetryParams.identity(seed_default.a0), tau_grid(40.0, 0.01), (24, 8))
    sol = solve_frozen(FrozenProblem(base, seed_default.eta0, delta=DELTA))
    worst = float(np.max(orthogonality_profile(sol.path)))
    criterion("orthogonality preservation", worst <= 1e-6, f"max residual {worst:.2e} on [0, 40]")


def test_decay_xi(criterion, fixed_point_default):
    path = fixed_point_default.path
    k = decay_exponent(path.taus, xi_norms(path), 2, 30)
    criterion("decay of xi", k >= 1.9, f"fitted exponent {k:.3f} over [2, 30] (need >= 1.9)")


def test_decay_sigma(criterion, fixed_point_default):
    path = fixed_point_default.path
    S = path.sigma_matrix()
    drift = np.linalg.norm(S - S[0], axis=1)
    k = decay_exponent(path.taus, drift, 2, 30)
    env = float(np.max(drift * japanese(path.taus)) / DELTA)
    criterion("decay of sigma", k >= 0.9,
              f"fitted exponent of |sigma - sigma(0)| {k:.3f} (need >= 0.9); "
              f"envelope constant {env:.1e}")


@pytest.mark.parametrize("delta", [0.02, 0.01, 0.005])
def test_contraction(criterion, delta):
    t0 = time.perf_counter()
    res = fixed_point(sample_seed(np.random.default_rng(42), delta))
    dt = time.perf_counter() - t0
    bound = 0.5 * math.sqrt(delta)
    worst = float(res.ratios.max()) if res.ratios.size else 0.0
    criterion(f"contraction delta={delta}", res.converged and worst <= bound and dt < 600,
              f"max ratio {worst:.2e} vs {bound:.3f}, {res.iterations} iterations, {dt:.1f} s")


def test_phi_quadratic(criterion, seed_default):
    eps = np.array([1.0, 0.5, 0.25, 0.125])
    sizes = [sobolev_norm(phi(seed_default.scaled(e))[1], 0.5) for e in eps]
    slope, r2 = loglog_fit(eps, np.array(sizes))
    criterion("Phi quadratic", abs(slope - 2.0) <= 0.1 and r2 >= 0.99,
              f"slope {slope:.4f}, R^2 {r2:.6f}")


def test_phi_lipschitz(criterion):
    rng = np.random.default_rng(31)
    quotients = []
    for _ in range(5):
        s1, s2 = sample_seed(rng, DELTA), sample_seed(rng, DELTA)
        d = sobolev_norm(phi(s1)[1] - phi(s2)[1], 0.5)
        quotients.append(d / (DELTA * sobolev_norm(s1.eta0 - s2.eta0, 0.5)))
    q = np.array(quotients)
    ok = bool(np.all(np.isfinite(q))) and q.max() / q.min() <= 2.0
    criterion("Phi Lipschitz", ok, f"quotients {q.min():.3e}..{q.max():.3e}, spread {q.max() / q.min():.2f}")


def test_self_consistency(criterion, fixed_point_default):
    tol = 1e-9
    worst = float(np.max(self_consistency_residual(fixed_point_default.path)[1:-1]))
    criterion("self-consistency", worst <= 10 * tol, f"max residual {worst:.2e} vs {10 * tol:.0e}")


def test_rescaling(criterion, fixed_point_default):
    a0, T = 0.5 + 2 * DELTA, 1.0
    rs = build_rescaling(lambda t: np.full(np.shape(t), a0), T)
    t = rs.t_grid
    e_lam = float(np.max(np.abs(rs.lam - np.sqrt(2 * a0 * (T - t)))))
    e_tau = float(np.max(np.abs(rs.tau + np.log1p(-t / T) / (2 * a0))))
    path = fixed_point_default.path
    rsp = rescaling_from_path(path, T)
    samples = reconstruct_flow(path, rsp, [rsp.t_of_tau(x) for x in (0.0, 1.0, 10.0, 20.0)])
    rt = max(round_trip_error(s) for s in samples)
    lim = tangent_flow_limit(path)
    bound = C0 * DELTA / japanese(path.taus[-1])
    ok = e_lam <= 1e-10 and e_tau <= 1e-10 and rt <= 1e-10 and lim.deviation <= bound
    criterion("rescaling", ok, f"lambda err {e_lam:.1e}, tau err {e_tau:.1e}, round trip {rt:.1e}, "
                               f"tangent deviation {lim.deviation:.1e} vs {bound:.1e}")
