"""Pure numpy versions of the compiled kernels (same signatures)."""

import numpy as np


def nonlinear_pointwise(a, k, xi, v, vy, vt, vyy, vyt, vtt):
    iv = 1.0 / v
    iv2 = iv * iv
    grad2 = np.einsum("ip,ip->p", vy, vy)
    mixed = np.einsum("ip,ip->p", vy, vyt)
    hess = np.einsum("ip,jp,ijp->p", vy, vy, vyy)
    J2 = 1.0 + grad2 + iv2 * vt * vt
    n1 = (iv2 * iv2 * vtt * vt * vt + iv2 * iv * vt * vt + 2.0 * iv2 * vt * mixed + hess) / J2
    common = -a * v + k * iv + n1
    return (a / k - iv2) * vtt + 2.0 * a * xi + common, -iv2 * vtt + common, n1


def etd_forward(c0, E, P1, P2, src):
    S = E.shape[0]
    out = np.empty((S + 1,) + np.shape(c0))
    out[0] = c0
    for i in range(S):
        out[i + 1] = E[i] * out[i] + P1[i] * src[i] + P2[i] * (src[i + 1] - src[i])
    return out


def etd_backward(cM, Einv, P1, P2, src):
    S = Einv.shape[0]
    out = np.empty((S + 1,) + np.shape(cM))
    out[S] = cM
    for i in range(S - 1, -1, -1):
        out[i] = Einv[i] * (out[i + 1] - P1[i] * src[i] - P2[i] * (src[i + 1] - src[i]))
    return out
