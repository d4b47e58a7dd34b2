"""Fourier-mode integrand g_j, line quadrature of I_j(tau), and the mode weight lambda_j.

    g_j(xi) = (1/2pi) e^{i tau xi} xi (xi - m) / [sinh(pi xi) sinh(a (xi - m))],
    m = (j+1)/2,  a = 2 beta - pi,
    I_j(tau) = integral of g_j over the real line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend as _backend
from .errors import InvalidParameter, NonConvergent
from .geometry import WormParams, HALF_PI
from .quadrature import NOISE_FACTOR, check, initial_mesh

# Envelope constant valid once |xi| and |xi - m| exceed 1/pi:
# |z/sinh(pi z)| * |w/sinh(a w)| <= 4|z||w| e^{-pi|xi| - a|xi-m|} / (1 - e^{-2})^2.
_C0 = (2.0 / math.pi) / (1.0 - math.exp(-2.0)) ** 2


@dataclass(frozen=True)
class QuadratureSpec:
    tol: float = 1e-10
    xi_cap: float = 400.0
    pole_eps: float = 1e-2
    max_subdiv: int = 20000

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidParameter("tol must be positive")
        if not self.xi_cap > 0:
            raise InvalidParameter("xi_cap must be positive")
        if not 0 < self.pole_eps < 0.25:
            raise InvalidParameter("pole_eps must lie in (0, 1/4)")
        if self.max_subdiv < 1:
            raise InvalidParameter("max_subdiv must be positive")


@dataclass(frozen=True)
class ModeResult:
    j: int
    value: complex
    err_estimate: float

    def __post_init__(self):
        if not self.err_estimate >= 0:
            raise ValueError("err_estimate must be non-negative")


def g_j(xi, tau: complex, j: int, params: WormParams, pole_eps: float = 1e-2):
    """Mode integrand at real xi (scalar or array)."""
    out = _backend.mode_values(np.atleast_1d(np.asarray(xi, dtype=float)), complex(tau),
                               0.5 * (j + 1), params.a, 0.0, float(pole_eps))
    return complex(out[0]) if np.ndim(xi) == 0 else np.asarray(out)


def _tail(T, kappa, c1, c2):
    """Integral over s > T of (s + c1)(s + c2) e^{-kappa s}."""
    return math.exp(-kappa * T) * ((T + c1) * (T + c2) / kappa + (2 * T + c1 + c2) / kappa ** 2
                                   + 2.0 / kappa ** 3)


def _side_envelopes(tau: complex, m: float, eta: float, params: WormParams, shift_env: bool):
    """(prefactor, rate, c1, c2) for the left and right tails beyond the break points."""
    two_beta = 2.0 * params.beta
    a = params.a
    t = complex(tau)
    pre_eta = -t.real * eta if shift_env else 0.0
    out = []
    for side, x0 in ((-1, min(0.0, m)), (1, max(0.0, m))):
        kappa = two_beta + side * t.imag
        expo = -t.imag * x0 - math.pi * abs(x0) - a * abs(x0 - m) + pre_eta
        c1 = math.hypot(x0, eta)
        c2 = math.hypot(x0 - m, eta)
        out.append((_C0 * math.exp(expo), kappa, c1, c2))
    return out


def line_integral(integrate, tau: complex, m: float, eta: float, params: WormParams,
                  quad: QuadratureSpec, shift_env: bool = True):
    """Adaptive integral of a mode-type integrand along Im xi = eta (panel over real xi).

    ``integrate(lo, hi, tol, max_subdiv, noise)`` runs the adaptive rule on an
    initial mesh. The window extends beyond the break points {0, m} until the analytic tail
    bound is below a fraction of tol * |value|; the tail bound is added to the
    returned error estimate.
    """
    t = complex(tau)
    if abs(t.imag) >= 2.0 * params.beta:
        raise NonConvergent(f"|Im tau| = {abs(t.imag)!r} >= 2 beta: integral diverges")
    envs = _side_envelopes(t, m, eta, params, shift_env)
    xl, xr = min(0.0, m), max(0.0, m)
    max_len = 1.0 if t.real == 0 else min(1.0, math.pi / abs(t.real))
    ref = max(e[0] for e in envs)
    target = 1e-3 * quad.tol * ref
    for _ in range(3):
        Ts = []
        for pre, kappa, c1, c2 in envs:
            T = 2.0
            while pre * _tail(T, kappa, c1, c2) > target and T < quad.xi_cap:
                T = min(quad.xi_cap, T * 1.25)
            Ts.append(T)
        breaks = [xl - Ts[0]] + sorted({xl, xr}) + [xr + Ts[1]]
        lo, hi = initial_mesh(breaks, max_len)
        res = check(integrate(lo, hi, quad.tol, quad.max_subdiv, NOISE_FACTOR), quad.max_subdiv)
        tail = sum(pre * _tail(T, kappa, c1, c2) for (pre, kappa, c1, c2), T in zip(envs, Ts))
        if tail <= 0.1 * quad.tol * abs(res.value) or all(T >= quad.xi_cap for T in Ts):
            break
        if abs(res.value) == 0.0:
            break
        new_target = 0.05 * quad.tol * abs(res.value)
        if new_target >= target:
            break
        target = new_target
    return res.value, res.err + tail


def compute_I_j(tau: complex, j: int, params: WormParams, quad: QuadratureSpec | None = None) -> ModeResult:
    """I_j(tau) by adaptive quadrature of g_j over the real line."""
    quad = quad or QuadratureSpec()
    t = complex(tau)
    m = 0.5 * (j + 1)
    a = params.a
    pe = quad.pole_eps

    def integrate(lo, hi, tol, max_subdiv, noise):
        return _backend.integrate_mode(lo, hi, t, m, a, 0.0, pe, tol, max_subdiv, noise)

    val, err = line_integral(integrate, t, m, 0.0, params, quad)
    return ModeResult(j, val, err)


def weight_lambda_j(y: float, j: int, params: WormParams) -> float:
    """Convolution of the indicator of [-pi/2, pi/2] with e^{(j+1)t} on [-(beta - pi/2), beta - pi/2]."""
    hw = params.half_width
    lo = max(-hw, y - HALF_PI)
    hi = min(hw, y + HALF_PI)
    if hi <= lo:
        return 0.0
    k = j + 1
    if k == 0:
        return hi - lo
    return math.exp(k * lo) * math.expm1(k * (hi - lo)) / k


def mode_ratios(tau: complex, lam: complex, params: WormParams) -> tuple[float, float]:
    """Geometric decay ratios of |term_j| for j -> +inf and j -> -inf in mode sums.

    Mode integrals concentrate near xi = 0 and xi = (j+1)/2, so |I_j| decays like
    e^{-min(pi + Im tau, a) j/2} for j -> +inf and like e^{-min(pi - Im tau, a)|j|/2}
    for j -> -inf; the ratios are < 1 exactly on the reduced domain.
    """
    t = complex(tau)
    al = abs(complex(lam))
    a = params.a
    rp = al * math.exp(-0.5 * min(math.pi + t.imag, a))
    rm = math.exp(-0.5 * min(math.pi - t.imag, a)) / al
    return rp, rm


def mode_series(term, rho_plus: float, rho_minus: float, tol: float, j_cap: int = 4000,
                min_terms: int = 4, j_max: int | None = None):
    """Bilateral sum of term(j) (complex) with a geometric tail stop on each side.

    A side stops once two consecutive terms satisfy 4 |t| rho/(1 - rho) < tol |S|.
    Returns (value, tail_bound, (j_lo, j_hi)). With ``j_max`` the sum is the
    fixed window |j| <= j_max and the tail bound is extrapolated from the last terms.
    """
    from .errors import TailNotSummable

    for rho in (rho_plus, rho_minus):
        if not rho < 1.0 - 1e-6:
            raise TailNotSummable(f"mode ratio {rho:.6g} is not below 1: point too close to the boundary")
    total = 0j
    tails = [0.0, 0.0]
    ends = [0, -1]
    if j_max is not None:
        vals = {}
        for j in range(-j_max, j_max + 1):
            vals[j] = term(j)
            total += vals[j]
        for side, (rho, jj) in enumerate(((rho_plus, j_max), (rho_minus, -j_max))):
            tails[side] = abs(vals[jj]) * rho / (1.0 - rho)
        return total, tails[0] + tails[1], (-j_max, j_max)
    gen = [iter(range(0, j_cap + 1)), iter(range(-1, -j_cap - 2, -1))]
    rhos = [rho_plus, rho_minus]
    done = [False, False]
    ok_count = [0, 0]
    n = [0, 0]
    while not all(done):
        for side in (0, 1):
            if done[side]:
                continue
            try:
                j = next(gen[side])
            except StopIteration:
                raise TailNotSummable(f"mode sum did not settle within |j| <= {j_cap}") from None
            t = term(j)
            total += t
            n[side] += 1
            ends[side] = j
            rho = rhos[side]
            bound = 4.0 * abs(t) * rho / (1.0 - rho)
            tails[side] = bound
            if n[side] >= min_terms and bound <= tol * abs(total):
                ok_count[side] += 1
                if ok_count[side] >= 2:
                    done[side] = True
            else:
                ok_count[side] = 0
    return total, tails[0] + tails[1], (ends[1], ends[0])
