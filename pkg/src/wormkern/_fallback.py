"""Pure numpy evaluation of the hot integrands and their Gauss-Kronrod panel sums.

The compiled module ``_accel`` exposes the same four functions with the same
signatures; ``backend`` picks one at import time.

Both integrands are evaluated in a factored exponential form so that
e^{i tau xi} never overflows on its own:

    z / sinh(c z) = 2 s z e^{-s c z} / (1 - e^{-2 s c z}),   s = sgn Re z.
"""
from __future__ import annotations

import math

import numpy as np

# Gauss-Kronrod 10/21 nodes (positive half, descending) and weights.
XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208067413160, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# 21 nodes on [-1, 1] and the matching weight vectors.
NODES = np.concatenate([-XGK[:-1], XGK[::-1]])
W21 = np.concatenate([WGK[:-1], WGK[::-1]])
W10 = np.zeros(21)
_gpos = [1, 3, 5, 7, 9]
for _k, _i in enumerate(_gpos):
    W10[_i] = WG[_k]
    W10[20 - _i] = WG[_k]

INV_2PI = 1.0 / (2.0 * math.pi)
TWO_OVER_PI = 2.0 / math.pi


def cexpm1(w):
    """expm1 for complex arrays, accurate for small |w|."""
    w = np.asarray(w, dtype=complex)
    x, y = w.real, w.imag
    em1 = np.expm1(x)
    s = np.sin(0.5 * y)
    re = em1 * np.cos(y) - 2.0 * s * s
    im = np.exp(x) * np.sin(y)
    return re + 1j * im


def inv_expm1(w):
    """1/(e^w - 1) for Re w >= 0, set to 0 once Re w > 700 (below 1e-300)."""
    w = np.asarray(w, dtype=complex)
    big = w.real > 700.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1.0 / cexpm1(np.where(big, 1.0, w))
    return np.where(big, 0.0, out)


def _x_over_sinh_taylor(cz, c):
    u = cz * cz
    return (1.0 - u / 6.0 + 7.0 * u * u / 360.0 - 31.0 * u * u * u / 15120.0) / c


def mode_values(xi, tau, m, a, eta, pole_eps):
    """g_j(xi + i eta) for real xi (array), with m = (j+1)/2 and a = 2 beta - pi."""
    xi = np.asarray(xi, dtype=float)
    z = xi + 1j * eta
    w = z - m
    s1 = np.where(xi < 0, -1.0, 1.0)
    s2 = np.where(xi - m < 0, -1.0, 1.0)
    c1 = math.pi * z
    c2 = a * w
    tay1 = np.abs(c1) < pole_eps
    tay2 = np.abs(c2) < pole_eps
    expo = 1j * tau * z
    expo = expo - np.where(tay1, 0.0, s1 * c1) - np.where(tay2, 0.0, s2 * c2)
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 = np.where(tay1, _x_over_sinh_taylor(c1, math.pi), -2.0 * s1 * z / cexpm1(-2.0 * s1 * c1))
        f2 = np.where(tay2, _x_over_sinh_taylor(c2, a), -2.0 * s2 * w / cexpm1(-2.0 * s2 * c2))
    return INV_2PI * f1 * f2 * np.exp(expo)


def split_values(xi, tau, m, a, eta, k):
    """Integrand of M_j (k=0) or E_j^(k) (k=1,2,3) along Im = eta, without the e^{-eta tau} prefactor."""
    xi = np.asarray(xi, dtype=float)
    s1 = np.where(xi < 0, -1.0, 1.0)
    s2 = np.where(xi - m < 0, -1.0, 1.0)
    zi = xi + 1j * eta
    expo = 1j * tau * xi - math.pi * np.abs(xi) - a * np.abs(xi - m) - 1j * eta * (s1 * math.pi + s2 * a)
    base = TWO_OVER_PI * s1 * s2 * zi * (zi - m) * np.exp(expo)
    if k == 0:
        return base
    if k in (1, 3):
        m1 = inv_expm1(2.0 * s1 * math.pi * zi)
    if k in (2, 3):
        m2 = inv_expm1(2.0 * s2 * a * (zi - m))
    if k == 1:
        return base * m1
    if k == 2:
        return base * m2
    return base * m1 * m2


def _panels(vals, half):
    kron = half * (vals @ W21)
    gauss = half * (vals @ W10)
    l1 = half * (np.abs(vals) @ W21)
    return kron, np.abs(kron - gauss), l1


def mode_panels(lo, hi, tau, m, a, eta, pole_eps):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    return _panels(mode_values(x, tau, m, a, eta, pole_eps), half)


def split_panels(lo, hi, tau, m, a, eta, k):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    return _panels(split_values(x, tau, m, a, eta, k), half)


def _integrate(panel, lo, hi, tol, max_subdiv, noise):
    from .quadrature import adaptive_raw
    return adaptive_raw(panel, lo, hi, tol, max_subdiv, noise)


def integrate_mode(lo, hi, tau, m, a, eta, pole_eps, tol, max_subdiv, noise):
    """Adaptive G10/K21 integral of the mode integrand; returns (value, err, l1, n, status, target)."""
    return _integrate(lambda l, h: mode_panels(l, h, tau, m, a, eta, pole_eps), lo, hi, tol, max_subdiv, noise)


def integrate_split(lo, hi, tau, m, a, eta, k, tol, max_subdiv, noise):
    """Adaptive G10/K21 integral of the split integrand; same return layout as integrate_mode."""
    return _integrate(lambda l, h: split_panels(l, h, tau, m, a, eta, k), lo, hi, tol, max_subdiv, noise)
