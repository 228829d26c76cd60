"""Random band-limited fields for property checks and seeding."""

from __future__ import annotations

import numpy as np

from .weighted_space import SpectralField, make_grid, sobolev_norm, values_from_coeffs


def random_field(rng: np.random.Generator, trunc=(24, 8), n_axis: int = 1, degree: int = 3,
                 max_m: int = 2, basis_weight: float = 0.5, decay: float = 0.5) -> SpectralField:
    """Gaussian coefficients on total Hermite degree <= ``degree`` and ``|m| <= max_m``.

    Coefficient scale shrinks like ``decay**|alpha|`` so high modes are small.
    """
    N, M = trunc
    c = np.zeros((N + 1,) * n_axis + (2 * M + 1,))
    for alpha in np.ndindex(*(degree + 1,) * n_axis):
        if sum(alpha) > degree:
            continue
        scale = decay ** sum(alpha)
        c[alpha + (0,)] = scale * rng.normal()
        for m in range(1, max_m + 1):
            c[alpha + (m,)] = scale * rng.normal()
            c[alpha + (M + m,)] = scale * rng.normal()
    return SpectralField(c, basis_weight)


def sup_on_grid(phi: SpectralField) -> float:
    """Largest absolute value over the padded collocation grid."""
    g = make_grid(phi.trunc, phi.n_axis, phi.basis_weight, padded=True)
    return float(np.abs(values_from_coeffs(phi.coeffs, phi.basis_weight, g)).max())


def scaled(phi: SpectralField, norm: float, sup_cap: float | None = None, s: int = 2) -> SpectralField:
    """Rescale to ``||phi||_{s,1/2} = norm``, shrinking further if the grid sup exceeds ``sup_cap``."""
    out = phi * (norm / sobolev_norm(phi, 0.5, s))
    if sup_cap is not None:
        sup = sup_on_grid(out)
        if sup > sup_cap:
            out = out * (sup_cap / sup)
    return out
