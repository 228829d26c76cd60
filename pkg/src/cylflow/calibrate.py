"""Measure the implicit constants of the nonlinear estimates on a seeded corpus.

Run ``python3 -m cylflow.calibrate`` to regenerate ``constants.json``.  The
stored value of each constant is the largest ratio seen on the corpus; the
checks multiply it by the ``headroom`` factor.
"""

from __future__ import annotations

import argparse
import json
from importlib import resources
from pathlib import Path

import numpy as np

from ._random import random_field, scaled
from .nonlinearity import N_apply, N_grid_values, _band_check
from .spectral_operator import build_modes, project
from .weighted_space import sobolev_norm

CORPUS_SEED = 20240601
HEADROOM = 1.25


def _fields(rng, count, trunc, n_axis, norm):
    return [scaled(random_field(rng, trunc, n_axis), norm, sup_cap=0.3) for _ in range(count)]


def measure_A3(rng, trunc=(24, 8), n_axis=1, delta=0.01, count=6, s=2) -> float:
    """Largest ``||P^(m,n) N(a, xi)||_{s-2,a} / ||xi||_s^2`` over labels (1,0), (2,0)."""
    worst = 0.0
    for a in (0.5 + delta, 0.5 + 1.5 * delta, 0.5 + 2 * delta):
        _band_check(a, delta)
        modes = build_modes(a, trunc, n_axis)
        for xi in _fields(rng, count, trunc, n_axis, 0.05):
            for eps in (1.0, 0.1, 0.01):
                x = xi * eps
                den = sobolev_norm(x, 0.5, s) ** 2
                Nf = N_apply(a, x)
                for label in ((1, 0), (2, 0)):
                    worst = max(worst, sobolev_norm(project(Nf, modes, label), a, s - 2) / den)
    return worst


def measure_C2(rng, trunc=(24, 8), n_axis=1, count=6, s=2) -> float:
    """Largest Lipschitz quotient ``||dN|| / (delta1 (|da| + ||dxi||_s))``."""
    worst = 0.0
    for delta1 in (0.05, 0.025, 0.0125):
        for xi in _fields(rng, count, trunc, n_axis, 0.5 * delta1):
            dxi = scaled(random_field(rng, trunc, n_axis), 0.25 * delta1, sup_cap=0.3)
            xi1 = xi + dxi
            for a0, a1 in ((0.52, 0.52), (0.52, 0.521), (0.51, 0.53)):
                dN = N_apply(a1, xi1) - N_apply(a0, xi)
                lhs = sobolev_norm(dN, 0.5, s - 2)
                den = delta1 * (abs(a1 - a0) + sobolev_norm(dxi, 0.5, s))
                worst = max(worst, lhs / den)
    return worst


def pointwise_ratio(a, xi) -> float:
    """Largest node-wise ``|N| / ((1+|y|)(|xi|^2 + |D xi|^2 + |D^2 xi|^2))``."""
    from .nonlinearity import pointwise_bound
    lhs, rhs = pointwise_bound(a, xi, C=1.0)
    keep = rhs > 1e-300
    return float(np.max(lhs[keep] / rhs[keep])) if keep.any() else 0.0


def measure_C0(rng, trunc=(24, 8), n_axis=1, count=6) -> float:
    worst = 0.0
    for a in (0.51, 0.52):
        for xi in _fields(rng, count, trunc, n_axis, 0.02):
            worst = max(worst, pointwise_ratio(a, xi))
    return worst


def calibrate(seed: int = CORPUS_SEED, trunc=(24, 8), n_axis: int = 1) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "A3_c": measure_A3(rng, trunc, n_axis),
        "C2_C": measure_C2(rng, trunc, n_axis),
        "C0_C": measure_C0(rng, trunc, n_axis),
        "headroom": HEADROOM,
        "corpus_seed": seed,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Measure and store the nonlinear-estimate constants.")
    ap.add_argument("--seed", type=int, default=CORPUS_SEED)
    ap.add_argument("--naxis", type=int, default=1)
    ap.add_argument("--output", type=Path, default=None,
                    help="file to write (default: the packaged constants.json)")
    args = ap.parse_args(argv)
    out = calibrate(args.seed, n_axis=args.naxis)
    path = args.output or Path(str(resources.files("cylflow").joinpath("constants.json")))
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
