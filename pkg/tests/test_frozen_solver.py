import numpy as np
import pytest
from scipy.interpolate import make_interp_spline

from cylflow.errors import DomainError, PreconditionError, ShapeError
from cylflow.frozen_solver import (
    FlowPath,
    FrozenProblem,
    gamma_solve,
    japanese,
    membership_check,
    ode_bounded_solve,
    orthogonality_profile,
    solve_frozen,
    tau_grid,
    xi_norms,
)
from cylflow.modulation import SymmetryParams
from cylflow.stable_manifold import decay_exponent
from cylflow.weighted_space import SpectralField, rebase

A0 = 0.52
TAUS = tau_grid(40.0, 0.01)


def _static(a=A0, taus=TAUS, trunc=(24, 8)):
    return FlowPath.static(SymmetryParams.identity(a), taus, trunc)


def test_bounded_solution_closed_form():
    x0, x = ode_bounded_solve(lambda t: np.ones_like(t), lambda t: np.exp(-2 * t), TAUS)
    assert x0 == pytest.approx(-1 / 3, abs=1e-10)
    assert np.allclose(x, -np.exp(-2 * TAUS) / 3, atol=1e-10)
    # ODE residual x' - x - f along the returned trajectory
    sp = make_interp_spline(TAUS, x, k=7)
    res = sp.derivative()(TAUS[50:-50]) - x[50:-50] - np.exp(-2 * TAUS[50:-50])
    assert np.max(np.abs(res)) <= 1e-8


def test_bounded_solution_arrays_second_order():
    errs = []
    for dt in (0.02, 0.01):
        t = tau_grid(40.0, dt)
        x0, _ = ode_bounded_solve(np.ones_like(t), np.exp(-2 * t), t)
        errs.append(abs(x0 + 1 / 3))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_bounded_solution_zero_source():
    x0, x = ode_bounded_solve(np.full_like(TAUS, 0.7), np.zeros_like(TAUS), TAUS)
    assert x0 == 0.0 and not np.any(x)


def test_bounded_solution_power_law_source():
    x0, x = ode_bounded_solve(lambda t: 0.5 + 0 * t, lambda t: japanese(t) ** -4, TAUS)
    assert np.all(np.abs(x) <= 2 * japanese(TAUS) ** -4 / 0.5 + 1e-12)
    assert x0 < 0


def test_bounded_solution_errors():
    with pytest.raises(DomainError):
        ode_bounded_solve(np.full_like(TAUS, -1.0), np.zeros_like(TAUS), TAUS)
    with pytest.raises(ShapeError):
        ode_bounded_solve(np.ones_like(TAUS), np.zeros(3), TAUS)
    with pytest.raises(DomainError):
        ode_bounded_solve(np.ones_like(TAUS), np.exp(0.1 * TAUS), TAUS)


def test_gamma_solve():
    # int_0^inf (1 + t^2)^{-3/2} dt = 1
    g0, g = gamma_solve(lambda t: japanese(t) ** -3, TAUS)
    assert g0 == pytest.approx(-1.0, abs=1e-10)
    g0a, _ = gamma_solve(japanese(TAUS) ** -3, TAUS)
    assert g0a == pytest.approx(-1.0, abs=1e-4)
    with pytest.raises(DomainError):
        gamma_solve(japanese(TAUS) ** -1.0, TAUS)
    z0, z = gamma_solve(np.zeros_like(TAUS), TAUS)
    assert z0 == 0.0 and not np.any(z)


def test_trivial_problem_stays_static():
    sol = solve_frozen(FrozenProblem(_static(), SpectralField.zeros()))
    assert not np.any(sol.path.xi)
    assert not np.any(sol.path.sigma_dot_matrix())
    assert np.all(sol.coeffs.as_vector() == 0)


def test_single_stable_mode_decays_exactly():
    # a3 mode, kappa = 1 at m = 0: coefficient decays like exp(-a0 tau) at linear order
    f = SpectralField.from_modes({((3,), 0): 1e-6}, basis_weight=A0)
    sol = solve_frozen(FrozenProblem(_static(), rebase(f, 0.5)))
    c = np.array([rebase(sol.path.xi_field(i), A0).coefficient((3,), 0) for i in (0, 100, 500)])
    assert np.allclose(c / 1e-6, np.exp(-A0 * TAUS[[0, 100, 500]]), rtol=1e-6)


def test_decay_and_orthogonality(fixed_point_default):
    path = fixed_point_default.path
    k = decay_exponent(path.taus, xi_norms(path), 2, 20)
    assert k >= 2.0
    assert np.max(orthogonality_profile(path)) <= 1e-6


def test_time_step_refinement(seed_default):
    t1 = tau_grid(10.0, 0.02)
    t2 = tau_grid(10.0, 0.01)
    outs = []
    for t in (t1, t2):
        sol = solve_frozen(FrozenProblem(_static(seed_default.a0, t), seed_default.eta0))
        outs.append(xi_norms(sol.path)[-1])
    assert abs(outs[0] - outs[1]) <= 1e-6 * outs[1] + 1e-14


def test_membership():
    rep = membership_check(_static(), 0.01)
    assert rep.passed and rep.first_violation is None
    p = _static(taus=tau_grid(5.0, 0.01))
    da = p.da.copy()
    da[200] = 1.0
    bad = FlowPath(p.taus, p.a, p.z, p.g, da, p.dz, p.dg, p.xi)
    rep = membership_check(bad, 0.01)
    assert not rep.passed
    assert rep.first_violation[0] == 200 and rep.first_violation[2] == "sigma_dot"
    assert rep.smallest_c0 == pytest.approx(japanese(p.taus[200]) ** 2 / 0.01)


def test_problem_preconditions():
    with pytest.raises(PreconditionError):
        FrozenProblem(_static(a=0.5), SpectralField.zeros())
    with pytest.raises(PreconditionError):
        FrozenProblem(_static(), SpectralField.constant(1e-3))
    with pytest.raises(ShapeError):
        FrozenProblem(_static(), SpectralField.zeros((10, 4)))
