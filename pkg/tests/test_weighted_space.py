import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cylflow.errors import DomainError, ShapeError
from cylflow.weighted_space import (
    SpaceParams,
    SpectralField,
    field_from_bytes,
    field_from_json,
    field_to_bytes,
    field_to_json,
    from_values,
    gaussian_moment,
    gram_matrix,
    inner_product,
    interpolation_check,
    make_grid,
    norm0,
    pivot_norm,
    pivot_weight,
    rebase,
    sobolev_norm,
    to_values,
)

from conftest import small_field

seeds = st.integers(0, 2**31 - 1)
weights = st.floats(0.3, 0.9)


def test_constant_inner_product_closed_form():
    # <1, 1>_a = 2 pi * sqrt(2 pi / a) per axis
    for a in (0.5, 0.52, 0.7):
        one = SpectralField.constant(1.0)
        assert inner_product(one, one, a) == pytest.approx(2 * math.pi * math.sqrt(2 * math.pi / a), rel=1e-14)
    one2 = SpectralField.constant(1.0, trunc=(6, 3), n_axis=2)
    assert inner_product(one2, one2, 0.5) == pytest.approx(2 * math.pi * (2 * math.pi / 0.5), rel=1e-14)


def test_linear_function_norm():
    # y = h_1(sqrt(w) y)/sqrt(w); ||y||^2_{0,a} = 2 pi * (1/a) sqrt(2 pi / a)
    w = 0.5
    y = SpectralField.from_modes({((1,), 0): 1 / math.sqrt(w)}, basis_weight=w)
    a = 0.6
    assert norm0(y, a) ** 2 == pytest.approx(2 * math.pi * gaussian_moment(2, a), rel=1e-13)


def test_sobolev_norm_of_constant_is_l2():
    one = SpectralField.constant(2.0)
    assert sobolev_norm(one, 0.5, 2) == pytest.approx(norm0(one, 0.5), rel=1e-14)


def test_sobolev_norm_counts_derivatives():
    # for cos(theta): ||.||_2^2 = ||c||^2 (1 + 1 + 1) with d_theta and d_theta^2 contributions
    c = SpectralField.from_modes({((0,), 1): 1.0})
    base = norm0(c, 0.5) ** 2
    assert sobolev_norm(c, 0.5, 2) ** 2 == pytest.approx(3 * base, rel=1e-13)


def test_gram_identity_at_basis_weight():
    G = gram_matrix(8, 0.5, 0.5, 0.5)
    d = np.diag(G)
    assert np.allclose(G, np.diag(d), atol=1e-13)
    assert np.allclose(d, math.sqrt(2 * math.pi / 0.5), rtol=1e-13)


def test_shape_mismatch_raises():
    with pytest.raises(ShapeError):
        inner_product(SpectralField.zeros((4, 2)), SpectralField.zeros((5, 2)), 0.5)


def test_domain_errors():
    with pytest.raises(DomainError):
        SpaceParams(a=-1.0)
    with pytest.raises(DomainError):
        inner_product(SpectralField.zeros(), SpectralField.zeros(), 0.0)
    phi = SpectralField.constant(1e-3)
    with pytest.raises(DomainError):
        interpolation_check(phi, 0.6, 1.0, 0.01)


def test_pivot_weight_value():
    assert pivot_weight(1 / 16) == 0.25
    assert pivot_weight(0.01) == pytest.approx(0.46)


def test_weaker_weight_dominates():
    phi = small_field(np.random.default_rng(5))
    assert sobolev_norm(phi, 0.5) <= sobolev_norm(phi, 0.3)


@given(seeds, weights)
def test_rebase_round_trip(seed, w):
    phi = small_field(np.random.default_rng(seed))
    back = rebase(rebase(phi, w), 0.5)
    assert np.max(np.abs(back.coeffs - phi.coeffs)) <= 1e-11


@given(seeds, weights)
def test_inner_product_symmetric_and_weight_independent(seed, a):
    r = np.random.default_rng(seed)
    f, g = small_field(r), small_field(r)
    ip = inner_product(f, g, a)
    assert ip == pytest.approx(inner_product(g, f, a), rel=1e-12, abs=1e-16)
    # changing the basis weight does not change the function or its inner products
    assert ip == pytest.approx(inner_product(rebase(f, 0.6), g, a), rel=1e-10, abs=1e-15)


@given(seeds, st.floats(-3, 3).filter(lambda c: c == 0 or abs(c) > 1e-100))
def test_norm_homogeneous(seed, c):
    f = small_field(np.random.default_rng(seed))
    assert sobolev_norm(f * c, 0.55) == pytest.approx(abs(c) * sobolev_norm(f, 0.55), rel=1e-12, abs=1e-300)


@given(seeds)
def test_grid_round_trip(seed):
    f = small_field(np.random.default_rng(seed))
    g = make_grid(f.trunc, 1, 0.5)
    back = from_values(to_values(f, g), g)
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12


@given(seeds, st.sampled_from([1, 2]))
def test_serialization_round_trip(seed, n_axis):
    f = small_field(np.random.default_rng(seed), trunc=(6, 3), n_axis=n_axis)
    assert np.array_equal(field_from_json(field_to_json(f)).coeffs, f.coeffs)
    b = field_to_bytes(f)
    g = field_from_bytes(b)
    assert np.array_equal(g.coeffs, f.coeffs) and g.basis_weight == f.basis_weight


def test_binary_layout_little_endian():
    f = SpectralField.from_modes({((0,), 0): 1.5}, trunc=(2, 1))
    b = field_to_bytes(f)
    assert b[:4] == b"CYLF"
    assert len(b) == 4 + 4 * 4 + 8 + 8 * 3 * 3
    assert np.frombuffer(b[28:36], "<f8")[0] == 1.5


@settings(max_examples=100)
@given(seeds, st.floats(0.0, 1.0))
def test_interpolation_inequality(seed, frac):
    delta = 0.01
    phi = small_field(np.random.default_rng(seed), norm=delta)
    c = pivot_norm(phi, delta)
    lhs, rhs = interpolation_check(phi, 0.5 + 2 * delta * frac, c, delta)
    assert lhs <= rhs * (1 + 1e-12)
