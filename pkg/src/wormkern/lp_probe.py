"""Numerical exercise of the L^p machinery on the strip and half-plane worms.

Majorant kernels B_1..B_8 (and the Jacobian-weighted A_i = e^{Re w1 - Re z1} B_i),
Schur-test ratios with the matching test functions, Forelli-Rudin scaling
fits, and divergence probes for the sharp range 2/(1+nu) < p < 2/(1-nu).

Coordinates: w1 = t + iu, s = log|w2|^2, so that D'_beta is
|u - s| < pi/2, |s| < beta - pi/2 and dV(w) = (e^s / 2) dt du ds dtheta.
With x = Re z1 - t, y = Im z1 + u, tau = x + iy and r2 = |lambda|^2 = |z2|^2 e^s.
The mirror sigma(z1, z2) = (-z1, 1/z2) preserves D'_beta and sends
(tau, lambda) to (-tau, 1/lambda); B_4, B_5, B_6 are B_1, B_2, B_3 composed with it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import sici

from .errors import DomainViolation, IntegrationUnstable, InvalidParameter, NoValidB
from .geometry import (HALF_PI, StripPoint, WormParams, WormPoint, in_strip_worm, lp_range,
                       phi_inverse, phi_map, reduce)
from .modes import QuadratureSpec, mode_ratios
from .quadrature import tanh_sinh

FOUR_PI = 4.0 * math.pi
MAJORANTS = tuple(range(1, 9))
_BASE = {1: 1, 2: 2, 3: 3, 4: 1, 5: 2, 6: 3, 7: 7, 8: 8}


def conjugate_exponent(p: float) -> float:
    if not p > 1:
        raise InvalidParameter(f"p must exceed 1 (got {p!r})")
    return p / (p - 1.0)


def _check_index(i: int) -> int:
    if i not in MAJORANTS:
        raise InvalidParameter(f"majorant index must be in 1..8 (got {i!r})")
    return i


def mirror(p: StripPoint) -> StripPoint:
    """sigma(z1, z2) = (-z1, 1/z2)."""
    return StripPoint(-complex(p.z1), 1.0 / complex(p.z2))


# ---------------------------------------------------------------------------
# Majorant kernels at points


def _decay(x, kappa):
    ax = np.abs(x)
    return np.exp(-kappa * ax) * (1.0 + ax)


def _base_majorant(i: int, tau: complex, lam: complex, params: WormParams) -> float:
    x = tau.real
    hw = params.half_width
    two_beta = 2.0 * params.beta
    pole_top = math.exp(hw)
    pole_a = cmath.exp(0.5 * (math.pi - 1j * tau))
    if i == 1:
        return float(_decay(x, params.h) / (abs(1j * tau + two_beta) ** 2 * abs(pole_top - lam) ** 2))
    if i == 2:
        return float(_decay(x, params.h) / (abs(1j * tau + two_beta) ** 2 * abs(pole_a - lam) ** 2))
    if i == 3:
        return float(_decay(x, params.h) / (abs(pole_a - lam) ** 2 * abs(pole_top - lam) ** 2))
    if i == 7:
        return float(_decay(x, params.nu) / abs(pole_a - lam) ** 2)
    if i == 8:
        return float(_decay(x, params.nu) / abs(cmath.exp(-0.5 * (1j * tau + math.pi)) - lam) ** 2)
    raise AssertionError(i)


def majorant_B(i: int, z: StripPoint, w: StripPoint, params: WormParams) -> float:
    """Positive majorant kernel B_i(z, w) on D'_beta."""
    _check_index(i)
    for q in (z, w):
        if not in_strip_worm(q, params):
            raise DomainViolation(f"{q!r} is not in D'_beta")
    if i in (4, 5, 6):
        z, w = mirror(z), mirror(w)
    tl = reduce(z, w)
    return _base_majorant(_BASE[i], tl.tau, tl.lam, params)


def majorant_A(i: int, z: StripPoint, w: StripPoint, params: WormParams) -> float:
    """Jacobian-weighted majorant A_i = e^{Re w1 - Re z1} B_i for the half-plane worm."""
    return math.exp(complex(w.z1).real - complex(z.z1).real) * majorant_B(i, z, w, params)


def majorant_sum(z: StripPoint, w: StripPoint, params: WormParams) -> float:
    return sum(majorant_B(i, z, w, params) for i in MAJORANTS)


# ---------------------------------------------------------------------------
# Test functions


@dataclass(frozen=True)
class _Slabs:
    """Position of w (or z) in the (u, s) section with exact distances to its edges.

    ls = s + hw, rs = hw - s, lu = u - (s - pi/2), ru = (s + pi/2) - u.
    """
    s: np.ndarray
    u: np.ndarray
    ls: np.ndarray
    rs: np.ndarray
    lu: np.ndarray
    ru: np.ndarray

    def mirrored(self) -> "_Slabs":
        return _Slabs(-self.s, -self.u, self.rs, self.ls, self.ru, self.lu)

    def top(self):
        """e^{hw} - |w2|^2"""
        return np.exp(self.s) * np.expm1(self.rs)

    def left(self):
        """e^{u + pi/2} - |w2|^2"""
        return np.exp(self.s) * np.expm1(self.lu)

    def right(self):
        """|w2|^2 - e^{u - pi/2}"""
        return np.exp(self.u - HALF_PI) * np.expm1(self.ru)

    def beta_minus_u(self):
        return self.rs + self.ru


def _slabs_of(p: StripPoint, params: WormParams) -> _Slabs:
    hw = params.half_width
    s = 2.0 * math.log(abs(complex(p.z2)))
    u = complex(p.z1).imag
    arr = lambda v: np.asarray(float(v))
    return _Slabs(arr(s), arr(u), arr(s + hw), arr(hw - s), arr(u - s + HALF_PI), arr(s + HALF_PI - u))


def _phi_base(i: int, g: _Slabs, a: float):
    if i == 1:
        return (g.top() * g.beta_minus_u()) ** (-a)
    if i == 2:
        return (g.left() * g.beta_minus_u()) ** (-a)
    if i == 3:
        return (np.minimum(g.top(), g.left()) * g.top()) ** (-a)
    if i == 7:
        return g.left() ** (-a)
    if i == 8:
        return g.right() ** (-a)
    raise AssertionError(i)


def _phi(i: int, g: _Slabs, a: float):
    if i in (4, 5, 6):
        g = g.mirrored()
    return _phi_base(_BASE[i], g, a)


def test_function(i: int, w: StripPoint, params: WormParams, a: float, b: float = 0.0) -> float:
    """Schur test function for B_i (b = 0) or A_i (weight e^{-b Re w1})."""
    _check_index(i)
    if not in_strip_worm(w, params):
        raise DomainViolation(f"{w!r} is not in D'_beta")
    return float(math.exp(-b * complex(w.z1).real) * _phi(i, _slabs_of(w, params), a))


# ---------------------------------------------------------------------------
# Theta-averaged majorants and the Re w1 integrals


def poisson_mean(A2, r2):
    """(1/2pi) * integral over theta of 1/|A - sqrt(r2) e^{i theta}|^2 for |A|^2 = A2."""
    return 1.0 / np.abs(A2 - r2)


def poisson_pair_modulus(A2a, A2b, r2):
    """Modulus Q of the product Poisson kernel: (1/2pi) int P_a P_b = (1 - Q^2)/(D_a D_b |1 - Q e^{i phi}|^2)."""
    qa = np.sqrt(np.minimum(A2a, r2) / np.maximum(A2a, r2))
    qb = np.sqrt(np.minimum(A2b, r2) / np.maximum(A2b, r2))
    return qa * qb


def _aux_fg(z):
    """Auxiliary functions f(z) = int_0^inf e^{-zt}/(1+t^2) dt and g(z) = int_0^inf t e^{-zt}/(1+t^2) dt."""
    si, ci = sici(z)
    sz, cz = np.sin(z), np.cos(z)
    f = ci * sz - (si - HALF_PI) * cz
    g = -ci * cz - (si - HALF_PI) * sz
    return f, g


def lorentz_decay_integral(kappa: float, gamma: float, c):
    """int_R e^{-kappa|x|}(1+|x|) e^{gamma x} / (x^2 + c^2) dx (closed form; inf if not integrable)."""
    c = np.asarray(c, dtype=float)
    out = np.zeros_like(c)
    for k in (kappa - gamma, kappa + gamma):
        if k <= 0:
            return np.full_like(c, np.inf)
        f, g = _aux_fg(k * c)
        out = out + f / c + g
    return out


def decay_integral(kappa: float, gamma: float) -> float:
    """int_R e^{-kappa|x|}(1+|x|) e^{gamma x} dx."""
    tot = 0.0
    for k in (kappa - gamma, kappa + gamma):
        if k <= 0:
            return math.inf
        tot += 1.0 / k + 1.0 / (k * k)
    return tot


def _periodized_decay(xl, xr, kappa, gamma):
    """Sum over k of e^{-kappa|x+kL|}(1+|x+kL|) e^{gamma(x+kL)}, L = 4 pi, for x in (0, L).

    Evaluated from the distances xl = x and xr = L - x.
    """
    L = FOUR_PI
    al, ar = kappa - gamma, kappa + gamma
    r = math.exp(-al * L)
    rp = math.exp(-ar * L)
    right = np.exp(-al * xl) * ((1.0 + xl) / (1.0 - r) + L * r / (1.0 - r) ** 2)
    # sum_{k>=1} e^{-ar(kL - x)} (1 + kL - x) with kL - x = xr + (k-1) L
    left = np.exp(-ar * xr) * ((1.0 + xr) / (1.0 - rp) + L * rp / (1.0 - rp) ** 2)
    return right + left


def poisson_decay_integral(kappa: float, gamma: float, Q, rule):
    """int_R e^{-kappa|x|}(1+|x|) e^{gamma x} (1-Q^2)/(1 - 2Q cos(x/2) + Q^2) dx.

    The decay weight is periodized onto one period [0, 4 pi] where the Poisson
    peaks sit at both endpoints; ``rule`` is a tanh-sinh rule.
    """
    if kappa - gamma <= 0 or kappa + gamma <= 0:
        return np.full(np.shape(Q), np.inf)
    Q = np.asarray(Q, dtype=float)[..., None]
    xl, xr, w = rule.mapped(0.0, FOUR_PI)
    W = _periodized_decay(xl, xr, kappa, gamma)
    sin_q = np.where(xl < xr, np.sin(0.25 * xl), np.sin(0.25 * xr))
    P = (1.0 - Q) * (1.0 + Q) / ((1.0 - Q) ** 2 + 4.0 * Q * sin_q ** 2)
    return np.sum(w * W * P, axis=-1)


def _pole_moduli(i: int, y, params: WormParams):
    """|A|^2 of the lambda-poles of base majorant i as functions of y = Im tau."""
    top = math.exp(2.0 * params.half_width)
    if i == 1:
        return (np.full_like(y, top),)
    if i == 2 or i == 7:
        return (np.exp(math.pi + y),)
    if i == 3:
        return (np.exp(math.pi + y), np.full_like(y, top))
    if i == 8:
        return (np.exp(y - math.pi),)
    raise AssertionError(i)


def averaged_majorant_t(i: int, y, r2, params: WormParams, gamma: float, rule) -> np.ndarray:
    """2 pi * int over Re w1 of (theta-mean of B_i) * e^{gamma x}, at Re z1 = 0.

    ``y`` and ``r2`` are Im tau and |lambda|^2 for the (mirror-applied) base majorant.
    """
    base = _BASE[i]
    kappa = params.nu if base in (7, 8) else params.h
    poles = _pole_moduli(base, y, params)
    if base in (1, 2):
        c = 2.0 * params.beta - y
        tpart = lorentz_decay_integral(kappa, gamma, c)
        return 2.0 * math.pi * tpart * poisson_mean(poles[0], r2)
    if base in (7, 8):
        return 2.0 * math.pi * decay_integral(kappa, gamma) * poisson_mean(poles[0], r2)
    Qm = poisson_pair_modulus(poles[0], poles[1], r2)
    tpart = poisson_decay_integral(kappa, gamma, Qm, rule)
    return 2.0 * math.pi * tpart / (np.abs(poles[0] - r2) * np.abs(poles[1] - r2))


# ---------------------------------------------------------------------------
# Schur tests


@dataclass(frozen=True)
class SchurGrid:
    """Tanh-sinh step and endpoint cutoff for (Im w1, log|w2|^2); Re w1 is handled in closed form
    or by a periodized tanh-sinh rule with the same parameters."""
    step: float = 0.125
    eps: float = 1e-10

    def refined(self) -> "SchurGrid":
        return SchurGrid(self.step / 2.0, max(self.eps * 1e-4, 1e-300))


@dataclass(frozen=True)
class SchurConfig:
    p: float
    a: float
    b: Optional[float] = None
    mc_samples: int = 4000
    grid: SchurGrid = field(default_factory=SchurGrid)

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidParameter(f"p must exceed 1 (got {self.p!r})")
        if not self.a > 0:
            raise InvalidParameter("test exponent a must be positive")
        if self.mc_samples < 1:
            raise InvalidParameter("mc_samples must be positive")

    @property
    def p_conj(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def a_valid(self) -> bool:
        return self.a < min(1.0 / self.p, 1.0 / self.p_conj)


def default_a(p: float) -> float:
    """Midpoint of the admissible test exponents 0 < a < min(1/p, 1/p')."""
    return 0.5 * min(1.0 / p, 1.0 - 1.0 / p)


def b_window(p: float, params: WormParams, kappa: Optional[float] = None) -> tuple[float, float]:
    """Open window of b with |1 - b q| < kappa for q = p and q = p' (kappa = nu by default).

    The Re w1 integral of A_i psi^q converges iff |1 - b q| < kappa_i (kappa_i = h for
    i <= 6 and nu for i = 7, 8); a single b serving all eight needs kappa = nu.
    Returns (lo, hi); the window is empty when lo >= hi.
    """
    k = params.nu if kappa is None else kappa
    pc = conjugate_exponent(p)
    lo = max((1.0 - k) / p, (1.0 - k) / pc)
    hi = min((1.0 + k) / p, (1.0 + k) / pc)
    return lo, hi


def printed_b_window(p: float, params: WormParams, kappa: Optional[float] = None) -> tuple[float, float]:
    """The one-sided window (max(1/p,1/p') - kappa, min(1/p, 1/p')) from 0 < 1 - bq < kappa."""
    k = params.nu if kappa is None else kappa
    pc = conjugate_exponent(p)
    return max(1.0 / p, 1.0 / pc) - k, min(1.0 / p, 1.0 / pc)


def choose_b(p: float, params: WormParams) -> float:
    lo, hi = b_window(p, params)
    if not lo < hi:
        raise NoValidB(f"no b with |1 - b q| < nu for q = p = {p:g} and q = p'; "
                       f"p outside ({lp_range(params)[0]:.6g}, {lp_range(params)[1]:.6g})")
    return 0.5 * (lo + hi)


def _section_nodes(params: WormParams, grid: SchurGrid, splits=()):
    """Tanh-sinh nodes for s in (-hw, hw), u in (s - pi/2, s + pi/2), split at the given u values."""
    rule = tanh_sinh(grid.step, grid.eps)
    hw = params.half_width
    ls, rs, ws = rule.mapped(-hw, hw)
    s = -hw + ls
    blocks = []
    cuts = sorted(splits)
    # u-intervals in terms of offsets: [s - pi/2, c1, c2, ..., s + pi/2]
    for k in range(len(cuts) + 1):
        lo = s - HALF_PI if k == 0 else np.full_like(s, cuts[k - 1])
        hi = s + HALF_PI if k == len(cuts) else np.full_like(s, cuts[k])
        lo_c = np.maximum(lo, s - HALF_PI)
        hi_c = np.minimum(hi, s + HALF_PI)
        ok = hi_c > lo_c
        if not ok.any():
            continue
        ss, lsk, rsk, wsk = s[ok], ls[ok], rs[ok], ws[ok]
        a, b = lo_c[ok], hi_c[ok]
        lu_off, ru_off, wu = rule.mapped(a, b)
        # distances to the section edges u = s -/+ pi/2
        lu = (a - (ss - HALF_PI))[:, None] + lu_off
        ru = ((ss + HALF_PI) - b)[:, None] + ru_off
        u = a[:, None] + lu_off
        S = np.broadcast_to(ss[:, None], u.shape)
        g = _Slabs(S.ravel(), u.ravel(), np.broadcast_to(lsk[:, None], u.shape).ravel(),
                   np.broadcast_to(rsk[:, None], u.shape).ravel(), lu.ravel(), ru.ravel())
        blocks.append((g, (wsk[:, None] * wu).ravel()))
    return blocks, rule


def _u_splits(i: int, params: WormParams):
    if _BASE[i] != 3:
        return ()
    c = params.beta - math.pi
    return (-c,) if i == 6 else (c,)


def schur_ratio(i: int, z: StripPoint, q: float, a: float, params: WormParams, grid: SchurGrid,
                b: float = 0.0, weighted: bool = False) -> float:
    """int B_i(z,w) phi^q(w) dV(w) / phi^q(z) (or the A_i / psi version when ``weighted``)."""
    _check_index(i)
    if not in_strip_worm(z, params):
        raise DomainViolation(f"{z!r} is not in D'_beta")
    blocks, rule = _section_nodes(params, grid, _u_splits(i, params))
    gz = _slabs_of(z, params)
    phiz = float(_phi(i, gz, a)) ** q
    z2sq = abs(complex(z.z2)) ** 2
    yz = complex(z.z1).imag
    # e^{(1 - bq) t} with t = -x at Re z1 = 0
    gamma = -(1.0 - b * q) if weighted else 0.0
    total = 0.0
    for g, w in blocks:
        y = yz + g.u
        r2 = z2sq * np.exp(g.s)
        if i in (4, 5, 6):
            y, r2 = -y, 1.0 / r2
        kern = averaged_majorant_t(i, y, r2, params, gamma, rule)
        dens = 0.5 * np.exp(g.s) * kern * _phi(i, g, a) ** q
        total += float(np.sum(w * dens))
    return total / phiz


@dataclass
class SchurResult:
    index: int
    kind: str
    p: float
    a: float
    b: float
    ratios: dict                 # exponent -> list of per-sample ratios at the base grid
    max_ratio: float
    refined_max_ratio: float
    rel_change: float

    @property
    def stable(self) -> bool:
        return math.isfinite(self.max_ratio) and self.rel_change < 0.1

    def to_dict(self) -> dict:
        return {"index": self.index, "kind": self.kind, "p": self.p, "a": self.a, "b": self.b,
                "max_ratio": self.max_ratio, "refined_max_ratio": self.refined_max_ratio,
                "rel_change": self.rel_change, "stable": self.stable}


def default_z_samples(params: WormParams, slacks: Sequence[float] = (0.3, 0.05, 0.01)) -> list[StripPoint]:
    """Points approaching each face of the (Im z1, log|z2|^2) section, plus corners and the center."""
    hw = params.half_width
    pts = [StripPoint(0j, 1.0 + 0j)]
    for d in slacks:
        for L, y in ((hw - d, hw - d), (-hw + d, -hw + d), (0.0, HALF_PI - d), (0.0, -HALF_PI + d),
                     (hw - d, hw + HALF_PI - 2 * d), (-hw + d, -hw - HALF_PI + 2 * d)):
            pts.append(StripPoint(complex(0.0, y), complex(math.exp(0.5 * L), 0.0)))
    return pts


def _run_schur(i, cfg: SchurConfig, z_samples, params, b, weighted, kind):
    z_samples = list(z_samples) if z_samples is not None else default_z_samples(params)
    exps = sorted({cfg.p, cfg.p_conj})
    ratios = {}
    best = [0.0, 0.0]
    for lvl, grid in enumerate((cfg.grid, cfg.grid.refined())):
        for q in exps:
            vals = [schur_ratio(i, z, q, cfg.a, params, grid, b, weighted) for z in z_samples]
            if lvl == 0:
                ratios[q] = vals
            best[lvl] = max(best[lvl], max(vals))
    m0, m1 = best
    change = abs(m1 - m0) / max(abs(m1), 1e-300) if math.isfinite(m0) and math.isfinite(m1) else math.inf
    res = SchurResult(i, kind, cfg.p, cfg.a, b, ratios, m0, m1, change)
    if not res.stable:
        err = IntegrationUnstable(f"{kind}{i}: max ratio {m0:.6g} -> {m1:.6g} under refinement "
                                  f"(change {change:.3g})")
        err.result = res
        raise err
    return res


def schur_check_Bi(i: int, cfg: SchurConfig, z_samples: Optional[Iterable[StripPoint]], params: WormParams,
                   strict: bool = True) -> SchurResult:
    """Schur ratio for B_i with exponents p and p'; raises IntegrationUnstable if a 2x
    grid refinement moves the max ratio by more than 10%."""
    _check_index(i)
    if strict and not cfg.a_valid:
        raise InvalidParameter(f"a = {cfg.a!r} violates 0 < a < min(1/p, 1/p')")
    return _run_schur(i, cfg, z_samples, params, 0.0, False, "B")


def schur_check_Ai(i: int, cfg: SchurConfig, z_samples: Optional[Iterable[StripPoint]], params: WormParams,
                   strict: bool = True) -> SchurResult:
    """Schur ratio for the Jacobian-weighted A_i with psi = e^{-b Re w1} phi_i."""
    _check_index(i)
    if strict and not cfg.a_valid:
        raise InvalidParameter(f"a = {cfg.a!r} violates 0 < a < min(1/p, 1/p')")
    if cfg.b is None:
        b = choose_b(cfg.p, params)
    else:
        b = float(cfg.b)
        lo, hi = b_window(cfg.p, params)
        if not lo < hi:
            raise NoValidB(f"b-window for p = {cfg.p:g} is empty")
        if strict and not lo < b < hi:
            raise InvalidParameter(f"b = {b!r} outside ({lo:.6g}, {hi:.6g})")
    return _run_schur(i, cfg, z_samples, params, b, True, "A")


# ---------------------------------------------------------------------------
# Forelli-Rudin scaling laws


@dataclass
class ScalingFit:
    which: str
    slope: float
    intercept: float
    sweep: np.ndarray
    values: np.ndarray

    def to_dict(self) -> dict:
        return {"which": self.which, "slope": self.slope, "intercept": self.intercept,
                "sweep": self.sweep.tolist(), "values": self.values.tolist()}


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _graded_panels(center_scale: float, far: float, ratio: float = 4.0):
    """Panel edges on (0, far] graded geometrically from center_scale."""
    edges = [0.0]
    e = center_scale
    while e < far:
        edges.append(e)
        e *= ratio
    edges.append(far)
    return np.array(edges)


def _graded_integral(f, scale: float, far: float, n: int = 16) -> float:
    """int_0^far f(x) dx for f with structure at x ~ scale near 0."""
    xg, wg = _gl(n)
    edges = _graded_panels(scale * 1e-2, far)
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * xg + 0.5 * (a + b)
    return float(np.sum(0.5 * (b - a) * wg * f(x)))


def l31ii_integral(a: float, h: float) -> float:
    """int_R e^{-h|x|}(1+|x|)/(x^2 + a^2) dx by graded Gauss-Legendre."""
    far = (40.0 + 2.0 * math.log1p(1.0 / h)) / h
    return 2.0 * _graded_integral(lambda x: np.exp(-h * x) * (1 + x) / (x * x + a * a), a, far)


def l33ii_integral(one_minus_b: float, delta: float, h: float) -> float:
    """int_R e^{-h|x|}(1+|x|)/|1 - b e^{ix}|^{1+delta} dx, peaks at x = 2 pi k resolved by grading."""
    u = float(one_minus_b)
    b = 1.0 - u
    far = (40.0 + 2.0 * math.log1p(1.0 / h)) / h
    kmax = int(far / (2 * math.pi)) + 1
    tot = 0.0

    def f(x):
        # |1 - b e^{ix}|^2 = u^2 + 4 b sin^2(x/2)
        return np.exp(-h * x) * (1 + x) / (u * u + 4.0 * b * np.sin(0.5 * x) ** 2) ** (0.5 * (1 + delta))

    for k in range(kmax + 1):
        c = 2 * math.pi * k
        # right half-period and, for k >= 1, left half-period around each peak
        g = lambda d, c=c: f(c + d)
        tot += _graded_integral(g, u, math.pi)
        if k >= 1:
            tot += _graded_integral(lambda d, c=c: f(c - d), u, math.pi)
    return 2.0 * tot


def l31i_integral(tau_abs: float, R: float, Q: float, p: float, q: float) -> float:
    """int_{|lam|<R} (Q^2-|lam|^2)^{-q} (R^2-|lam|^2)^{-p} |Q^2 - tau conj(lam)|^{-2} dV(lam)."""
    rule = tanh_sinh(0.0625, 1e-14)
    r, dR, w = rule.mapped(0.0, R)
    theta_mean = 1.0 / (Q ** 4 - tau_abs ** 2 * r * r)
    f = (Q * Q - r * r) ** (-q) * (dR * (2 * R - dR)) ** (-p) * theta_mean
    return float(2 * math.pi * np.sum(w * r * f))


def l33i_integral(tau_abs: float, R: float, Q: float, rho: float, a: float, b: float, theta: float = 0.0) -> float:
    """int_{|lam|<R} |R rho - e^{i theta} tau conj(lam)|^{-2} |Q^2 - tau conj(lam)|^{-2}
    (R^2 - |lam|^2)^{-a} (Q^2 - |lam|^2)^{-b} dV(lam)."""
    rule = tanh_sinh(0.0625, 1e-14)
    r, dR, w = rule.mapped(0.0, R)
    A2a = (R * rho) ** 2 / tau_abs ** 2
    A2b = Q ** 4 / tau_abs ** 2
    r2 = r * r
    Qm = poisson_pair_modulus(A2a, A2b, r2)
    # theta-mean of the two Poisson factors in lambda, with relative pole angle theta
    mean = (1 - Qm * Qm) / (np.abs(A2a - r2) * np.abs(A2b - r2) * (1 - 2 * Qm * math.cos(theta) + Qm * Qm))
    mean /= tau_abs ** 4
    f = mean * (dR * (2 * R - dR)) ** (-a) * (Q * Q - r2) ** (-b)
    return float(2 * math.pi * np.sum(w * r * f))


def _fit(xs, ys):
    lx, ly = np.log(xs), np.log(ys)
    slope, icept = np.polyfit(lx, ly, 1)
    return float(slope), float(icept)


L31II_SWEEP = tuple(np.geomspace(1e-3, 1e-1, 9))
L33II_SWEEP = tuple(np.geomspace(1e-12, 1e-8, 9))
# the L33i local slope settles onto -a only below rho - |tau| ~ 1e-5
L33I_SWEEP = tuple(np.geomspace(1e-5, 1e-9, 9))


def forelli_rudin_scaling(which: str, sweep: Optional[Sequence[float]] = None, *, h: float = 0.75,
                          delta: float = 0.5, p: float = 0.4, q: float = 0.3, a: float = 0.4,
                          b: float = 0.3, R: float = 1.0, Q: float = 1.5, rho: float = 0.8,
                          tau_abs: float = 0.5) -> ScalingFit:
    """Fit the log-log slope of a Forelli-Rudin-type integral against its small parameter.

    L31ii: a -> 0+ (slope -1).  L33ii: 1 - b -> 0+ (slope -delta).
    L31i: R - |tau| -> 0+ with Q > R fixed (slope 0, bounded).
    L33i: rho - |tau| -> 0+ with rho < Q (slope -a).
    """
    if sweep is not None:
        sweep = np.asarray(list(sweep), dtype=float)
        if sweep.size < 2:
            raise InvalidParameter("sweep needs at least two values")
        if np.any(sweep <= 0):
            raise InvalidParameter("sweep values must be positive")
    if which == "L31ii":
        xs = np.asarray(L31II_SWEEP) if sweep is None else sweep
        vals = np.array([l31ii_integral(v, h) for v in xs])
    elif which == "L33ii":
        xs = np.asarray(L33II_SWEEP) if sweep is None else sweep
        if not xs.max() < 1:
            raise InvalidParameter("1 - b must lie in (0, 1)")
        vals = np.array([l33ii_integral(v, delta, h) for v in xs])
    elif which == "L31i":
        xs = np.geomspace(1e-2, 1e-6, 9) if sweep is None else sweep
        vals = np.array([l31i_integral(R - v, R, Q, p, q) for v in xs])
    elif which == "L33i":
        xs = np.asarray(L33I_SWEEP) if sweep is None else sweep
        if not rho < Q:
            raise InvalidParameter("L33i sweep needs rho < Q")
        vals = np.array([l33i_integral(rho - v, R, Q, rho, a, b) for v in xs])
    else:
        raise InvalidParameter(f"unknown scaling law {which!r}; expected L31i, L31ii, L33i, L33ii")
    slope, icept = _fit(xs, vals)
    return ScalingFit(which, slope, icept, np.asarray(xs), vals)


# ---------------------------------------------------------------------------
# Kernel evaluation for many lambda at one tau


def _mode_block(tau: complex, params: WormParams, lam_min: float, lam_max: float, tol: float,
                quad: QuadratureSpec):
    """(j array, I_j array) covering sum_j I_j lambda^j to relative ~tol for lam_min <= |lambda| <= lam_max."""
    rp, _ = mode_ratios(tau, lam_max, params)
    _, rm = mode_ratios(tau, lam_min, params)
    if not (rp < 1 and rm < 1):
        raise DomainViolation("lambda range leaves the mode-sum domain")
    jp = int(math.ceil(math.log(tol * (1 - rp)) / math.log(rp))) + 4 if rp > 0 else 4
    jm = int(math.ceil(math.log(tol * (1 - rm)) / math.log(rm))) + 4 if rm > 0 else 4
    js = np.arange(-jm, jp + 1)
    from .kernel import _I_cached
    vals = np.array([_I_cached(tau, int(j), params.beta, quad)[0] for j in js], dtype=complex)
    return js, vals


def _kernel_many(js, Ij, lam):
    """sum_j I_j lambda^j for an array of lambda (negative powers included)."""
    lam = np.asarray(lam, dtype=complex)
    logl = np.log(lam)
    return np.exp(np.outer(logl, js)) @ Ij


# ---------------------------------------------------------------------------
# Divergence probe on the region where the kernel is bounded below


@dataclass
class DivergenceReport:
    p: float
    q: float                      # integrability exponent tested (p')
    expected_exponent: float      # q (nu - 1) + 2
    eps: np.ndarray
    cumulative: np.ndarray        # integral over |omega1| > eps
    cumulative_stderr: np.ndarray
    slab_density: np.ndarray
    slab_density_stderr: np.ndarray
    slab_mid: np.ndarray          # log|omega1| slab midpoints
    fitted_exponent: float
    fitted_exponent_stderr: float
    verdict: str                  # "divergent" | "convergent" | "inconclusive"
    accept_rate: float

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "expected_exponent": self.expected_exponent,
                "eps": self.eps.tolist(), "cumulative": self.cumulative.tolist(),
                "cumulative_stderr": self.cumulative_stderr.tolist(),
                "fitted_exponent": self.fitted_exponent, "fitted_exponent_stderr": self.fitted_exponent_stderr,
                "verdict": self.verdict, "accept_rate": self.accept_rate}


def default_probe_point(params: WormParams, slack: float = 0.5) -> WormPoint:
    """zeta with |zeta1| = 1, |zeta2| = 1, at distance ``slack`` from the face arg zeta1 = -pi/2."""
    return phi_map(StripPoint(complex(0.0, -HALF_PI + slack), 1.0 + 0j))


def _probe_u_range(z: StripPoint, params: WormParams):
    """Range of Im w1 on which {1/4 <= |A - lambda| <= 1/2} can meet D'_beta (A = e^{(pi - i tau)/2})."""
    yz = complex(z.z1).imag
    Lz = 2.0 * math.log(abs(complex(z.z2)))
    dz = yz - Lz + HALF_PI
    amax = 0.5 / -math.expm1(-0.5 * dz)
    lo = 2.0 * math.log(0.125) - math.pi - yz
    hi = 2.0 * math.log(amax) - math.pi - yz
    return max(lo, -params.beta), min(hi, params.beta)


def divergence_probe(p: float, zeta: Optional[WormPoint], params: WormParams,
                     eps_sweep: Optional[Sequence[float]] = None, *, n_mc: int = 400, seed: int = 0,
                     n_u: int = 8, n_t: int = 2, quad: Optional[QuadratureSpec] = None,
                     mode_tol: float = 1e-8, fit_skip: float = 8.0) -> DivergenceReport:
    """Monte-Carlo estimate of int over Omega_zeta, |omega1| > eps, of |K_{D_beta}(zeta, omega)|^{p'} dV.

    Omega_zeta = {|omega1| < |zeta1|, 1/4 <= |e^{pi/2}(zeta1/conj(omega1))^{-i/2} - zeta2 conj(omega2)| <= 1/2}.
    In strip coordinates this is 1/4 <= |A - lambda| <= 1/2 with A = e^{(pi - i tau)/2}. The
    Re w1 direction is split into slabs between consecutive eps values and integrated by
    Gauss-Legendre, Im w1 by Gauss-Legendre over the range where the region is nonempty,
    and lambda by uniform sampling of the annulus (rejecting points outside D'_beta).
    On each slab the density behaves like |omega1|^{q(nu-1)+2} once |log|omega1/zeta1|| exceeds
    ``fit_skip`` (subleading kernel terms die out like e^{-(min(1, 2 nu) - nu)|Re tau|}); the fitted
    exponent of those slab densities decides divergence (exponent <= 0) versus convergence.
    """
    q = conjugate_exponent(p)
    quad = quad or QuadratureSpec(tol=1e-9)
    zeta = zeta or default_probe_point(params)
    z = phi_inverse(zeta, params)
    rez = complex(z.z1).real
    if eps_sweep is None:
        eps_sweep = math.exp(rez) * np.exp(-np.arange(1, 21))
    eps = np.sort(np.asarray(list(eps_sweep), dtype=float))[::-1]
    if eps.size < 2 or eps[0] >= math.exp(rez) or eps[-1] <= 0:
        raise InvalidParameter("eps_sweep must hold >= 2 values in (0, |zeta1|)")
    edges = np.concatenate([[rez], np.log(eps)])
    u_lo, u_hi = _probe_u_range(z, params)
    if not u_lo < u_hi:
        raise DomainViolation("Omega_zeta is empty for this zeta")
    z2 = complex(z.z2)
    yz = complex(z.z1).imag
    hw = params.half_width
    ug, uw = _gl(n_u)
    u_nodes = 0.5 * (u_hi - u_lo) * ug + 0.5 * (u_hi + u_lo)
    u_w = 0.5 * (u_hi - u_lo) * uw
    tg, tw = _gl(n_t)
    area = math.pi * (0.25 - 0.0625)
    seeds = np.random.SeedSequence(seed).spawn(len(edges) - 1)
    dens, dens_se, mids, slab_vals, slab_var = [], [], [], [], []
    n_acc = n_tot = 0
    for k in range(len(edges) - 1):
        rng = np.random.default_rng(seeds[k])
        ta, tb = edges[k + 1], edges[k]
        val = 0.0
        var = 0.0
        for tn, twn in zip(0.5 * (tb - ta) * tg + 0.5 * (ta + tb), 0.5 * (tb - ta) * tw):
            for un, uwn in zip(u_nodes, u_w):
                tau = complex(rez - tn, yz + un)
                A = cmath.exp(0.5 * (math.pi - 1j * tau))
                rad = np.sqrt(rng.uniform(0.0625, 0.25, n_mc))
                ang = rng.uniform(0.0, 2 * math.pi, n_mc)
                lam = A + rad * np.exp(1j * ang)
                s = np.log(np.abs(lam) ** 2) - math.log(abs(z2) ** 2)
                ok = (np.abs(s) < hw) & (np.abs(un - s) < HALF_PI)
                n_tot += n_mc
                f = np.zeros(n_mc)
                if ok.any():
                    n_acc += int(ok.sum())
                    la = lam[ok]
                    js, Ij = _mode_block(tau, params, float(np.abs(la).min()), float(np.abs(la).max()),
                                         mode_tol, quad)
                    Kp = np.abs(_kernel_many(js, Ij, la))
                    # |K_D| = |K'| e^{-Re z1 - t}; dV(omega) = e^{2t} dV(w); dV(w2) = dV(lambda)/|z2|^2
                    f[ok] = (Kp * math.exp(-rez - tn)) ** q * math.exp(2 * tn)
                scale = twn * uwn * area / abs(z2) ** 2
                val += scale * f.mean()
                var += scale ** 2 * f.var(ddof=1) / n_mc
        slab_vals.append(val)
        slab_var.append(var)
        width = tb - ta
        dens.append(val / width)
        dens_se.append(math.sqrt(var) / width)
        mids.append(0.5 * (ta + tb))
    slab_vals = np.array(slab_vals)
    cum = np.cumsum(slab_vals)
    cum_se = np.sqrt(np.cumsum(slab_var))
    dens = np.array(dens)
    dens_se = np.array(dens_se)
    mids = np.array(mids)
    use = (rez - mids >= fit_skip) & (dens > 0)
    if use.sum() >= 3:
        wts = dens[use] / np.maximum(dens_se[use], 1e-300)
        coef, cov = np.polyfit(mids[use], np.log(dens[use]), 1, w=wts, cov="unscaled")
        e_fit, e_se = float(coef[0]), float(math.sqrt(cov[0, 0]))
    else:
        e_fit, e_se = math.nan, math.inf
    if not math.isfinite(e_fit) or e_se > abs(e_fit):
        verdict = "inconclusive"
    elif e_fit <= 0:
        verdict = "divergent"
    else:
        verdict = "convergent"
    return DivergenceReport(p, q, q * (params.nu - 1.0) + 2.0, eps, cum, cum_se, dens, dens_se, mids,
                            e_fit, e_se, verdict, n_acc / max(n_tot, 1))


# ---------------------------------------------------------------------------
# Lower bound along Omega_zeta and the Condition-R surrogate


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    x: np.ndarray
    y: np.ndarray

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "x": self.x.tolist(), "y": self.y.tolist()}


def lower_bound_path(zeta: Optional[WormPoint], params: WormParams, log_omega1: Sequence[float],
                     u: Optional[float] = None) -> list[WormPoint]:
    """Points omega in Omega_zeta with lambda = A (1 - 3/(8|A|)), i.e. |A - lambda| = 3/8."""
    zeta = zeta or default_probe_point(params)
    z = phi_inverse(zeta, params)
    u_lo, u_hi = _probe_u_range(z, params)
    yz = complex(z.z1).imag
    if u is None:
        # |A| = 1.5
        u = 2.0 * math.log(1.5) - math.pi - yz
    if not u_lo <= u <= u_hi:
        raise DomainViolation("u outside the range where Omega_zeta is nonempty")
    pts = []
    for t in log_omega1:
        tau = complex(complex(z.z1).real - t, yz + u)
        A = cmath.exp(0.5 * (math.pi - 1j * tau))
        lam = A * (1.0 - 0.375 / abs(A))
        w2 = (lam / complex(z.z2)).conjugate()
        w = StripPoint(complex(t, u), w2)
        if not in_strip_worm(w, params):
            raise DomainViolation(f"path point {w!r} is outside D'_beta")
        pts.append(phi_map(w))
    return pts


def lower_bound_slope(zeta: Optional[WormPoint], params: WormParams, log_omega1: Optional[Sequence[float]] = None,
                      route: str = "split", quad: Optional[QuadratureSpec] = None) -> SlopeFit:
    """Fitted slope of log|K_{D_beta}(zeta, omega)| against log|omega1| along the lower-bound path."""
    from .kernel import kernel_D_beta
    zeta = zeta or default_probe_point(params)
    if log_omega1 is None:
        # sample at one phase of the 4 pi periodic factor
        log_omega1 = -(10.0 + FOUR_PI * np.arange(3))
    ts = np.asarray(list(log_omega1), dtype=float)
    pts = lower_bound_path(zeta, params, ts)
    vals = np.array([abs(kernel_D_beta(zeta, om, params, route, quad)) for om in pts])
    slope, icept = np.polyfit(ts, np.log(vals), 1)
    return SlopeFit(float(slope), float(icept), ts, vals)


@dataclass
class ConditionRReport:
    eps: np.ndarray
    integral: np.ndarray
    increments: np.ndarray        # integral gained per eps step
    monotone: bool
    plateau: bool
    period_rate: float = float("nan")   # mean integrand over one 4 pi window in log r below eps_min

    def to_dict(self) -> dict:
        return {"eps": self.eps.tolist(), "integral": self.integral.tolist(),
                "increments": self.increments.tolist(), "monotone": self.monotone,
                "plateau": self.plateau, "period_rate": self.period_rate}


def condition_r_surrogate(omega0: Optional[WormPoint], params: WormParams,
                          eps_values: Optional[Sequence[float]] = None, r0: float = 1.0, theta: float = -1.2,
                          route: str = "expansion", quad: Optional[QuadratureSpec] = None,
                          nodes_per_unit: int = 3) -> ConditionRReport:
    """int_eps^{r0} |K_{D_beta}((r e^{i theta}, 1), omega0)|^2 r^{-2 nu} r dr as eps decreases.

    Integrated in log r by Gauss-Legendre panels of unit length. For small r the
    integrand in log r tends to a positive 4 pi-periodic function (the leading
    pole terms rotate with Im of their exponents), so the integral grows linearly in
    log(1/eps) on average while single-decade increments can differ by orders of
    magnitude. ``period_rate`` is that period average, measured on the window just
    below eps_min. A plateau is declared when the last half of the log(1/eps) range
    adds less than 1% to the integral, or when the period rate is not positive.
    """
    from .kernel import kernel_D_beta
    omega0 = omega0 or WormPoint(cmath.exp(-1.2j), 1.0 + 0j)
    if eps_values is None:
        eps_values = np.geomspace(1e-2, 1e-6, 5)
    eps = np.sort(np.asarray(list(eps_values), dtype=float))[::-1]
    if eps[0] >= r0 or eps[-1] <= 0:
        raise InvalidParameter("eps values must lie in (0, r0)")
    nu = params.nu
    edges = np.concatenate([[math.log(r0)], np.log(eps)])
    xg, wg = _gl(nodes_per_unit)

    def integrand(sv):
        zeta = WormPoint(cmath.exp(complex(sv, theta)), 1.0 + 0j)
        k = abs(kernel_D_beta(zeta, omega0, params, route, quad))
        r = math.exp(sv)
        # |K|^2 r^{-2 nu} r dr with dr = r ds
        return k * k * r ** (2.0 - 2.0 * nu)

    def integrate(a, b):
        n = max(1, int(math.ceil(b - a)))
        sub = np.linspace(a, b, n + 1)
        tot = 0.0
        for lo, hi in zip(sub[:-1], sub[1:]):
            for xv, wv in zip(xg, wg):
                tot += 0.5 * (hi - lo) * wv * integrand(0.5 * (hi - lo) * xv + 0.5 * (hi + lo))
        return tot

    incs = np.array([integrate(edges[k + 1], edges[k]) for k in range(len(edges) - 1)])
    cum = np.cumsum(incs)
    monotone = bool(np.all(incs[1:] > 0))
    period = 4.0 * math.pi
    rate = integrate(edges[-1] - period, edges[-1]) / period
    mid = 0.5 * (edges[1] + edges[-1])
    k_mid = int(np.searchsorted(-edges[1:], -mid))
    gained = cum[-1] - cum[min(k_mid, cum.size - 1)]
    plateau = bool(not rate > 0 or gained < 0.01 * cum[-1])
    return ConditionRReport(eps, cum, incs, monotone, plateau, float(rate))


# ---------------------------------------------------------------------------
# Majorant inequality |K'| <= C sum B_i


@dataclass
class MajorantFit:
    ratios: np.ndarray
    constant: float

    def to_dict(self) -> dict:
        return {"constant": self.constant, "n": int(self.ratios.size)}


def majorant_pairs(params: WormParams, n: int, seed: int = 0, min_slack: float = 0.05) -> list[tuple]:
    """Deterministic (z, w) pairs spread over D'_beta, biased toward the faces."""
    rng = np.random.default_rng(seed)
    hw = params.half_width
    out = []
    while len(out) < n:
        pts = []
        for _ in range(2):
            L = rng.uniform(-hw + min_slack, hw - min_slack)
            y = L + rng.uniform(-HALF_PI + min_slack, HALF_PI - min_slack)
            pts.append(StripPoint(complex(rng.uniform(-4, 4), y), math.exp(0.5 * L) * cmath.exp(1j * rng.uniform(0, 6.3))))
        out.append(tuple(pts))
    return out


def majorant_constant(pairs, params: WormParams, route: str = "brute",
                      quad: Optional[QuadratureSpec] = None) -> MajorantFit:
    """Ratios |K'(z,w)| / sum_i B_i(z,w) and their maximum (the fitted C)."""
    from .kernel import kernel_strip
    r = []
    for z, w in pairs:
        r.append(abs(kernel_strip(z, w, params, route, quad)) / majorant_sum(z, w, params))
    r = np.array(r)
    return MajorantFit(r, float(r.max()))
