import os
import subprocess
import sys

import numpy as np
import pytest

from cylflow import _kernels_py

compiled = pytest.importorskip("cylflow._kernels")


def _pointwise(rng, n_axis, points=500):
    v = 1.4 + 0.05 * rng.standard_normal(points)
    return (np.full(points, 0.52), 1.0, v - 1.4, v,
            0.05 * rng.standard_normal((n_axis, points)), 0.05 * rng.standard_normal(points),
            0.05 * rng.standard_normal((n_axis, n_axis, points)),
            0.05 * rng.standard_normal((n_axis, points)), 0.05 * rng.standard_normal(points))


def _etd(rng, steps=50, width=7):
    z = -0.52 * 0.01 * np.ones((steps, width))
    return (rng.standard_normal(width), np.exp(z), 0.01 * np.ones((steps, width)),
            0.005 * np.ones((steps, width)), 1e-3 * rng.standard_normal((steps + 1, width)))


@pytest.mark.parametrize("n_axis", [1, 2])
def test_pointwise_parity(rng, n_axis):
    args = _pointwise(rng, n_axis)
    for p, c in zip(_kernels_py.nonlinear_pointwise(*args), compiled.nonlinear_pointwise(*args)):
        assert np.allclose(p, c, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("name", ["etd_forward", "etd_backward"])
def test_etd_parity(rng, name):
    args = _etd(rng)
    p = getattr(_kernels_py, name)(*args)
    c = getattr(compiled, name)(*args)
    assert np.allclose(p, c, rtol=1e-13, atol=1e-15)


def test_pure_python_switch():
    env = dict(os.environ, CYLFLOW_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import cylflow; print(cylflow.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    import cylflow

    assert cylflow.BACKEND == ("python" if os.environ.get("CYLFLOW_PURE_PYTHON") else "compiled")
