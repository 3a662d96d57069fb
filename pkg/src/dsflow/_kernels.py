"""Compiled hot loop for the de Sitter graph rate and its RK4 step.

The kernels repeat the arithmetic of ``axigraph.frame`` node by node; the
test suite checks them against the numpy path to round-off.
"""
import math

import numpy as np
from numba import njit

OK = 0
SPACELIKE = 1
MEAN_CONVEXITY = 2


@njit(cache=True)
def graph_rate(rho, out, h, n, inv_tan, eps_v, eps_H):
    """Fill ``out`` with ``warp - warp' v / H1``.

    Returns ``(code, node, max_diffusivity, max_ring2)``.  A spacelike
    breach anywhere takes precedence over a mean-convexity failure, as in
    ``axigraph.frame``.
    """
    m = rho.size
    dmax = 0.0
    rmax = 0.0
    inv2h = 0.5 / h
    invh2 = 1.0 / (h * h)
    a = (2.0 * n + 1.0) / (3.0 * n)
    bad_H = -1
    for i in range(m):
        left = rho[i - 1] if i > 0 else rho[1]
        right = rho[i + 1] if i < m - 1 else rho[m - 2]
        if i == 0 or i == m - 1:
            d1 = 0.0
        else:
            d1 = (right - left) * inv2h
        if i == 0:
            d2 = (2.0 * a * (rho[1] - rho[0]) + 0.5 * (1.0 - a) * (rho[2] - rho[0])) * invh2
        elif i == m - 1:
            d2 = (2.0 * a * (rho[m - 2] - rho[m - 1]) + 0.5 * (1.0 - a) * (rho[m - 3] - rho[m - 1])) * invh2
        else:
            d2 = (right - 2.0 * rho[i] + left) * invh2
        th = math.cosh(rho[i])
        dth = math.sinh(rho[i])
        q = d1 / th
        v2 = 1.0 - q * q
        if not v2 > eps_v:
            return SPACELIKE, i, dmax, rmax
        v = math.sqrt(v2)
        if i == 0 or i == m - 1:
            cot_d1 = d2
        else:
            cot_d1 = d1 * inv_tan[i]
        k_rad = (th * d2 + th * th * dth - 2.0 * dth * d1 * d1) / (th * th * th * v2 * v)
        k_ang = (dth + cot_d1 / th) / (th * v)
        H1 = (k_rad + (n - 1) * k_ang) / n
        if not H1 > eps_H:
            if bad_H < 0:
                bad_H = i
            continue
        out[i] = th - dth * v / H1
        D = dth / (n * H1 * H1 * th * th * v2)
        if D > dmax:
            dmax = D
        ring2 = (n - 1) / n * (k_rad - k_ang) ** 2
        if ring2 > rmax:
            rmax = ring2
    if bad_H >= 0:
        return MEAN_CONVEXITY, bad_H, dmax, rmax
    return OK, -1, dmax, rmax


@njit(cache=True)
def rk4_step(rho, k1, dt, out, h, n, inv_tan, eps_v, eps_H):
    """Classical RK4 from ``rho`` with precomputed first stage ``k1``; writes ``out``."""
    m = rho.size
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    for i in range(m):
        tmp[i] = rho[i] + 0.5 * dt * k1[i]
    code, node, _, _ = graph_rate(tmp, k2, h, n, inv_tan, eps_v, eps_H)
    if code != OK:
        return code, node
    for i in range(m):
        tmp[i] = rho[i] + 0.5 * dt * k2[i]
    code, node, _, _ = graph_rate(tmp, k3, h, n, inv_tan, eps_v, eps_H)
    if code != OK:
        return code, node
    for i in range(m):
        tmp[i] = rho[i] + dt * k3[i]
    code, node, _, _ = graph_rate(tmp, k4, h, n, inv_tan, eps_v, eps_H)
    if code != OK:
        return code, node
    s = dt / 6.0
    for i in range(m):
        out[i] = rho[i] + s * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return OK, -1
