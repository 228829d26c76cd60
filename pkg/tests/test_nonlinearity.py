import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cylflow.errors import DomainError, GraphConditionError
from cylflow.nonlinearity import (
    F_gradient,
    F_value,
    F_variation,
    GraphFunction,
    N_apply,
    N_lipschitz,
    cylinder,
    expansion_residual,
    gradient_consistency,
    pointwise_bound,
    projected_N_bound,
    quadratic_slope,
)
from cylflow.spectral_operator import build_modes
from cylflow.weighted_space import SpectralField, norm0, sobolev_norm

from conftest import small_field

A = 0.52
DELTA = 0.01


@pytest.mark.parametrize("n_axis", [1, 2])
def test_cylinder_value_closed_form(n_axis):
    trunc = (24, 8) if n_axis == 1 else (8, 4)
    for a in (0.5, A):
        v = cylinder(a, trunc, n_axis)
        expected = math.sqrt(1 / a) * 2 * math.pi * (2 * math.pi / a) ** (n_axis / 2)
        assert F_value(v, a) == pytest.approx(expected, rel=1e-13)


def test_cylinder_is_critical(rng):
    v = cylinder(A, (24, 8), 1)
    assert np.max(np.abs(F_gradient(v, A).coeffs)) < 1e-13
    h = small_field(rng)
    assert abs(F_variation(v, h, A)) < 1e-13


def test_graph_condition():
    v = SpectralField.constant(-0.1)
    with pytest.raises(GraphConditionError):
        GraphFunction(v, A)
    with pytest.raises(GraphConditionError):
        N_apply(A, SpectralField.constant(-5.0))


def test_N_vanishes_at_zero():
    assert np.max(np.abs(N_apply(A, SpectralField.zeros()).coeffs)) == 0.0


def test_linearization_of_unstable_mode():
    modes = build_modes(A, (24, 8), 1)
    s = modes.by_label((0, 0))[0].field
    errs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        v = cylinder(A, (24, 8), 1) + s * eps
        r = F_gradient(v, A) - s * (-2 * A * eps)
        errs.append(norm0(r, A))
    slope = np.polyfit(np.log([1e-2, 5e-3, 2.5e-3]), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


@given(st.integers(0, 2**31 - 1))
def test_expansion_identity(seed):
    xi = small_field(np.random.default_rng(seed))
    assert expansion_residual(A, xi) <= 1e-8


def test_expansion_identity_two_axes(rng):
    xi = small_field(rng, trunc=(10, 4), n_axis=2)
    assert expansion_residual(A, xi) <= 1e-8


def test_gradient_consistency_order(rng):
    for _ in range(3):
        v = cylinder(A, (24, 8), 1) + small_field(rng)
        h = small_field(rng, norm=0.1)
        errs, order = gradient_consistency(v, h, A)
        assert order >= 1.9


@pytest.mark.parametrize("label", [(1, 0), (2, 0)])
def test_quadratic_slope(rng, label):
    modes = build_modes(A, (24, 8), 1)
    assert quadratic_slope(A, small_field(rng), modes, label) == pytest.approx(2.0, abs=0.05)


def test_projected_bound_zero_and_plateau(rng):
    a = 0.5 + 1.5 * DELTA
    modes = build_modes(a, (24, 8), 1)
    assert projected_N_bound(a, SpectralField.zeros(), modes, DELTA) == (0.0, 0.0)
    xi = small_field(rng)
    ratios = []
    for eps in (1.0, 0.3, 0.1, 0.03):
        lhs, rhs = projected_N_bound(a, xi * eps, modes, DELTA)
        assert lhs <= rhs
        ratios.append(lhs / sobolev_norm(xi * eps, 0.5) ** 2)
    assert max(ratios) / min(ratios) < 1.2


def test_projected_bound_uniform_in_a(rng):
    xi = small_field(rng)
    ratios = []
    for a in np.linspace(0.5 + DELTA, 0.5 + 2 * DELTA, 5):
        lhs, _ = projected_N_bound(a, xi, build_modes(a, (24, 8), 1), DELTA)
        ratios.append(lhs)
    assert max(ratios) / min(ratios) < 1.1


def test_projected_bound_band():
    with pytest.raises(DomainError):
        projected_N_bound(0.6, SpectralField.zeros(), build_modes(0.6), DELTA)


def test_lipschitz_estimates(rng):
    xi = small_field(rng, norm=0.02)
    assert N_lipschitz(A, xi, A, xi, 0.05) == (0.0, 0.0)
    lhs, rhs = N_lipschitz(A, xi, A + 1e-3, xi, 0.05)
    assert lhs <= rhs
    consts = []
    for d1 in (0.05, 0.025, 0.0125):
        x0 = small_field(rng, norm=0.5 * d1)
        dx = small_field(rng, norm=0.2 * d1)
        lhs, rhs = N_lipschitz(A, x0, A, x0 + dx, d1, C=1.0)
        consts.append(lhs / rhs)
    assert max(consts) / min(consts) < 2.0
    with pytest.raises(DomainError):
        N_lipschitz(A, small_field(rng, norm=0.2), A, xi, 0.05)


def test_pointwise_bound_with_calibrated_constant():
    r = np.random.default_rng(99)
    for _ in range(5):
        lhs, rhs = pointwise_bound(A, small_field(r, norm=0.02))
        assert np.all(lhs <= rhs)


def test_calibrated_constants_hold_on_fresh_corpus():
    r = np.random.default_rng(7)
    for a in (0.5 + DELTA, 0.5 + 2 * DELTA):
        modes = build_modes(a, (24, 8), 1)
        for _ in range(4):
            xi = small_field(r)
            for lab in ((1, 0), (2, 0)):
                lhs, rhs = projected_N_bound(a, xi, modes, DELTA, label=lab)
                assert lhs <= rhs
