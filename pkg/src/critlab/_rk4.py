"""Fixed-step RK4 kernels for the radial integrators (numba-compiled).

The shooting kernel integrates

    y'' + ((d-1)/r) y' = s*y - |y|^(q-1) y - sum_i c_i |y|^(p_i - 1) y

from a quadratic series start at r = h (which removes the (d-1)/r division
at the origin with O(h^4) consistency) and stops at the first
classification event.  The linear kernel integrates the homogeneous
Helmholtz equation in either direction for the resolvent's d=4 pair.
"""

import numpy as np
from numba import njit

RAN_OUT = 0
CROSSING = 1
REBOUND = 2
DECAY = 3
OVERFLOW = 4

_BIG = 1e120


@njit(cache=True)
def _rhs(y, dy, r, d, s, q, coeffs, exps):
    f = s * y - np.abs(y) ** (q - 1.0) * y
    for j in range(coeffs.shape[0]):
        f -= coeffs[j] * np.abs(y) ** (exps[j] - 1.0) * y
    return f - (d - 1.0) / r * dy


@njit(cache=True)
def shoot(d, s, q, coeffs, exps, y_center, h, n, decay_u, decay_du):
    """Integrate one shot on the uniform grid; returns (y, dy, status, i_last)."""
    y = np.zeros(n + 1)
    dy = np.zeros(n + 1)
    y[0] = y_center
    # curvature at the center from the full right-hand side
    f0 = s * y_center - np.abs(y_center) ** (q - 1.0) * y_center
    for j in range(coeffs.shape[0]):
        f0 -= coeffs[j] * np.abs(y_center) ** (exps[j] - 1.0) * y_center
    c2 = f0 / (2.0 * d)
    y[1] = y_center + c2 * h * h
    dy[1] = 2.0 * c2 * h

    status = RAN_OUT
    i_last = n
    y0 = y[1]
    y1 = dy[1]
    # events can already hold at the first interior node (tiny data rebounds)
    if y0 < 0.0:
        return y, dy, CROSSING, 1
    if y1 > 0.0 and y0 > 0.0:
        return y, dy, REBOUND, 1
    r = h
    for i in range(1, n):
        k1a = y1
        k1b = _rhs(y0, y1, r, d, s, q, coeffs, exps)
        rm = r + 0.5 * h
        ya = y0 + 0.5 * h * k1a
        yb = y1 + 0.5 * h * k1b
        k2a = yb
        k2b = _rhs(ya, yb, rm, d, s, q, coeffs, exps)
        ya = y0 + 0.5 * h * k2a
        yb = y1 + 0.5 * h * k2b
        k3a = yb
        k3b = _rhs(ya, yb, rm, d, s, q, coeffs, exps)
        re = r + h
        ya = y0 + h * k3a
        yb = y1 + h * k3b
        k4a = yb
        k4b = _rhs(ya, yb, re, d, s, q, coeffs, exps)
        y0 = y0 + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        y1 = y1 + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        r = re
        y[i + 1] = y0
        dy[i + 1] = y1
        if not (np.isfinite(y0) and np.isfinite(y1)) or np.abs(y0) > _BIG:
            status = OVERFLOW
            i_last = i + 1
            break
        if y0 < 0.0:
            status = CROSSING
            i_last = i + 1
            break
        if y1 > 0.0:
            status = REBOUND
            i_last = i + 1
            break
        if y0 < decay_u and np.abs(y1) < decay_du:
            status = DECAY
            i_last = i + 1
            break
    return y, dy, status, i_last


@njit(cache=True)
def integrate_linear(d, s, r_nodes, y_seed, dy_seed, forward):
    """Homogeneous radial Helmholtz integration along given uniform nodes.

    forward=True integrates from the first node outward, otherwise from the
    last node inward.  The seed applies at the starting node.
    """
    n = r_nodes.shape[0]
    ys = np.zeros(n)
    dys = np.zeros(n)
    h = r_nodes[1] - r_nodes[0]
    if forward:
        idx = np.arange(n)
        step = h
    else:
        idx = np.arange(n - 1, -1, -1)
        step = -h
    ys[idx[0]] = y_seed
    dys[idx[0]] = dy_seed
    y0 = y_seed
    y1 = dy_seed
    for kk in range(n - 1):
        r = r_nodes[idx[kk]]
        k1a = y1
        k1b = s * y0 - (d - 1.0) / r * y1
        rm = r + 0.5 * step
        ya = y0 + 0.5 * step * k1a
        yb = y1 + 0.5 * step * k1b
        k2a = yb
        k2b = s * ya - (d - 1.0) / rm * yb
        ya = y0 + 0.5 * step * k2a
        yb = y1 + 0.5 * step * k2b
        k3a = yb
        k3b = s * ya - (d - 1.0) / rm * yb
        re = r + step
        ya = y0 + step * k3a
        yb = y1 + step * k3b
        k4a = yb
        k4b = s * ya - (d - 1.0) / re * yb
        y0 = y0 + step / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        y1 = y1 + step / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        ys[idx[kk + 1]] = y0
        dys[idx[kk + 1]] = y1
    return ys, dys
