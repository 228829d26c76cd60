import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cylflow.errors import DomainError, ShapeError
from cylflow.frozen_solver import FlowPath, tau_grid
from cylflow.modulation import SymmetryParams
from cylflow.rescaling import (
    build_rescaling,
    geometric_t_grid,
    reconstruct_flow,
    rescaling_from_path,
    round_trip_error,
    tangent_flow_limit,
    tilt_rotation,
)

A0 = 0.52
T = 1.0


def const(a):
    return lambda t: np.full(np.shape(t), a)


def test_constant_dilation_closed_forms():
    rs = build_rescaling(const(A0), T)
    t = rs.t_grid
    assert np.allclose(rs.lam, np.sqrt(2 * A0 * (T - t)), rtol=1e-14)
    assert np.allclose(rs.tau, -np.log1p(-t / T) / (2 * A0), rtol=1e-12, atol=1e-14)
    for tt in (0.1, 0.5, 0.9, 0.999):
        assert rs.lambda_of_t(tt) == pytest.approx(math.sqrt(2 * A0 * (T - tt)), rel=1e-14)
        assert rs.tau_of_t(tt) == pytest.approx(-math.log1p(-tt) / (2 * A0), rel=1e-13)
    assert rs.identity_residual() <= 1e-10


def test_array_input_matches_callable():
    g = geometric_t_grid(T, 200)
    a1 = build_rescaling(np.full(200, A0), T, g)
    a2 = build_rescaling(const(A0), T, g)
    assert np.array_equal(a1.lam, a2.lam) and np.array_equal(a1.tau, a2.tau)


def test_variable_dilation_identity():
    rs = build_rescaling(lambda t: 0.5 + 0.1 * np.sin(3 * np.asarray(t)), 2.0)
    assert rs.identity_residual() <= 1e-8
    assert np.all(np.diff(rs.lam) < 0) and np.all(np.diff(rs.tau) > 0)


@given(st.floats(0.01, 15.0))
def test_inverse_time_map(tau):
    rs = build_rescaling(const(A0), T)
    t = rs.t_of_tau(tau)
    assert rs.tau_of_t(t) == pytest.approx(tau, rel=1e-10, abs=1e-12)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        build_rescaling(const(-0.1), T)
    with pytest.raises(DomainError):
        build_rescaling(const(A0), -1.0)
    with pytest.raises(ShapeError):
        build_rescaling(np.ones(3), T)
    rs = build_rescaling(const(A0), T)
    with pytest.raises(DomainError):
        rs.lambda_of_t(1.5)
    with pytest.raises(DomainError):
        rs.t_of_tau(-1.0)
    with pytest.raises(DomainError):
        rs.t_of_tau(1e3)


def test_tilt_rotation_orthogonal():
    R = tilt_rotation(np.array([[0.1], [-0.3]]))
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-14)
    assert np.linalg.det(R) == pytest.approx(1.0)
    assert np.array_equal(tilt_rotation(np.zeros((2, 1))), np.eye(3))


def test_reconstruction_round_trip_and_shrinking_radius(fixed_point_default):
    path = fixed_point_default.path
    rs = rescaling_from_path(path, T)
    ts = [rs.t_of_tau(x) for x in (0.5, 5.0, 15.0)]
    samples = reconstruct_flow(path, rs, ts)
    for s in samples:
        assert round_trip_error(s) <= 1e-10
    # physical circle radius follows lambda sqrt(k/a)
    for s in samples:
        r = np.hypot(s.points[..., 1], s.points[..., 2])
        mid = len(s.y) // 2
        assert np.max(np.abs(r[mid] / s.lam - s.radius[mid])) <= 0.05
    radii = [np.max(np.hypot(s.points[..., 1], s.points[..., 2])) for s in samples]
    assert radii[0] > radii[1] > radii[2]


def test_static_path_reconstructs_shrinking_cylinder():
    path = FlowPath.static(SymmetryParams.identity(A0), tau_grid(20.0, 0.05), (8, 4))
    rs = rescaling_from_path(path, T)
    for s in reconstruct_flow(path, rs, [0.0, 0.5, 0.99]):
        r = np.hypot(s.points[..., 1], s.points[..., 2])
        assert np.allclose(r, math.sqrt(2 * (1 - s.t)), rtol=1e-12)


def test_tangent_flow_limit(fixed_point_default):
    path = fixed_point_default.path
    lim = tangent_flow_limit(path)
    assert lim.deviation <= 10 * 0.01 / (1 + path.taus[-1])
    assert lim.radius == pytest.approx(math.sqrt(1 / lim.a))
    static = FlowPath.static(SymmetryParams.identity(A0), tau_grid(10.0, 0.05), (8, 4))
    ls = tangent_flow_limit(static)
    assert ls.a == A0 and ls.deviation == 0.0


def test_tangent_flow_nonconvergence():
    p = FlowPath.static(SymmetryParams.identity(A0), tau_grid(10.0, 0.05), (8, 4))
    a = A0 + 0.01 * np.sin(p.taus)
    wobbly = FlowPath(p.taus, a, p.z, p.g, p.da, p.dz, p.dg, p.xi)
    with pytest.raises(DomainError):
        tangent_flow_limit(wobbly)
