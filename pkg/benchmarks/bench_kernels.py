"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the comparison does not depend on
``CYLFLOW_PURE_PYTHON``.  Outputs are also checked for agreement.
"""

import argparse
import timeit

import numpy as np

from cylflow import _kernels_py

try:
    from cylflow import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def pointwise_inputs(rng, n_axis=1, points=38 * 25 * 64):
    v = 1.4 + 0.05 * rng.standard_normal(points)
    return (
        np.full(points, 0.52), 1.0, v - 1.4, v,
        0.05 * rng.standard_normal((n_axis, points)), 0.05 * rng.standard_normal(points),
        0.05 * rng.standard_normal((n_axis, n_axis, points)),
        0.05 * rng.standard_normal((n_axis, points)), 0.05 * rng.standard_normal(points),
    )


def etd_inputs(rng, steps=4000, width=425):
    z = -0.52 * 0.01 * np.ones((steps, width))
    return (rng.standard_normal(width), np.exp(z), 0.01 * np.ones((steps, width)),
            0.005 * np.ones((steps, width)), 1e-3 * rng.standard_normal((steps + 1, width)))


def bench(name, fn_py, fn_c, args, repeat):
    t_py = min(timeit.repeat(lambda: fn_py(*args), number=1, repeat=repeat))
    line = f"{name:22s} python {t_py * 1e3:9.2f} ms"
    if fn_c is not None:
        t_c = min(timeit.repeat(lambda: fn_c(*args), number=1, repeat=repeat))
        out_py, out_c = fn_py(*args), fn_c(*args)
        if isinstance(out_py, tuple):
            diff = max(float(np.max(np.abs(np.asarray(p) - np.asarray(c)))) for p, c in zip(out_py, out_c))
        else:
            diff = float(np.max(np.abs(np.asarray(out_py) - np.asarray(out_c))))
        line += f"   compiled {t_c * 1e3:9.2f} ms   speed-up {t_py / t_c:6.2f}x   max diff {diff:.1e}"
    print(line)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if compiled is None:
        print("compiled extension not available; timing the fallback only")
    for n_axis in (1, 2):
        bench(f"nonlinear_pointwise n={n_axis}", _kernels_py.nonlinear_pointwise,
              getattr(compiled, "nonlinear_pointwise", None), pointwise_inputs(rng, n_axis), args.repeat)
    bench("etd_forward", _kernels_py.etd_forward, getattr(compiled, "etd_forward", None),
          etd_inputs(rng), args.repeat)
    bench("etd_backward", _kernels_py.etd_backward, getattr(compiled, "etd_backward", None),
          etd_inputs(rng), args.repeat)


if __name__ == "__main__":
    main()
