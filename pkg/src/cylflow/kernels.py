"""Kernel backend selection.

The compiled extension is used when it was built; otherwise (or when the
environment variable ``CYLFLOW_PURE_PYTHON`` is set to a non-empty value)
the numpy fallback is used.  ``BACKEND`` names the active choice.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("CYLFLOW_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py
        BACKEND = "python"


def _c(x):
    return np.ascontiguousarray(x, dtype=float)


def nonlinear_pointwise(a, k, xi, v, vy, vt, vyy, vyt, vtt):
    """Pointwise nonlinear terms on flattened grid data.

    ``a`` may be a scalar or one value per point.  Returns
    ``(N, F_rest, N1)``; see :mod:`cylflow.nonlinearity`.
    """
    a = np.broadcast_to(np.asarray(a, dtype=float), np.shape(v))
    return _impl.nonlinear_pointwise(_c(a), float(k), _c(xi), _c(v), _c(vy), _c(vt),
                                     _c(vyy), _c(vyt), _c(vtt))


def etd_forward(c0, E, P1, P2, src):
    return _impl.etd_forward(_c(c0), _c(E), _c(P1), _c(P2), _c(src))


def etd_backward(cM, Einv, P1, P2, src):
    return _impl.etd_backward(_c(cM), _c(Einv), _c(P1), _c(P2), _c(src))
