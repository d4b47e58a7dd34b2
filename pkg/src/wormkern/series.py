"""Closed-form mode sums and the special functions they are built from.

Notation: A = i tau + R + S, B = i tau - R - S, x = i tau + R - S,
x' = i tau - R + S, m = (j+1)/2. For the worm, R = 2 beta - pi and S = pi.

The model integral is

    scriptI_j(tau) = int sigma_RS(xi) (xi + ih)(xi + ih - m) e^{i tau xi} e^{-R|xi - m| - S|xi|} dxi,
    sigma_RS = sgn(xi) sgn(xi - m) e^{-ih(sgn(xi - m) R + sgn(xi) S)},

split at 0 and m into pieces I - II + III (j >= 0) or I* - II* + III* (j <= -1),
each with an elementary antiderivative. With delta > 0 the pieces stop delta
short of the break points.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import backend as _backend
from .errors import AnnulusViolation, DenominatorVanishes, DomainViolation, InvalidParameter
from .geometry import WormParams, in_reduced_domain, sgn
from .modes import QuadratureSpec, line_integral, mode_ratios, mode_series
from .residues import residue_R_j

# Removable-point policy for the G functions: inside |x| < G_SWITCH the value is
# the mean over a circle of radius G_RADIUS (exact for entire functions up to
# aliasing of order G_RADIUS^G_NODES / G_NODES!).
G_SWITCH = 0.25
G_RADIUS = 0.5
G_NODES = 32
E_SWITCH = 1e-3
DENOM_EPS = 1e-12


@dataclass(frozen=True)
class RSParams:
    R: float
    S: float
    delta: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if not (self.R > 0 and self.S > 0):
            raise InvalidParameter("R and S must be positive")
        if not self.delta >= 0:
            raise InvalidParameter("delta must be non-negative")

    @classmethod
    def worm(cls, params: WormParams, h: float, delta: float = 0.0) -> "RSParams":
        return cls(params.a, math.pi, delta, h)


def _circle_mean(f, x0: complex):
    theta = 2.0 * math.pi * (np.arange(G_NODES) + 0.5) / G_NODES
    pts = x0 + G_RADIUS * np.exp(1j * theta)
    vals = f(pts)
    if isinstance(vals, tuple):
        return tuple(complex(np.mean(v)) for v in vals)
    return complex(np.mean(vals))


# ---------------------------------------------------------------------------
# E and G functions

def E_func(x: complex) -> complex:
    """(1 - e^{x/2})/(x/2), entire; Taylor branch for |x| < 1e-3."""
    x = complex(x)
    y = 0.5 * x
    if abs(x) < E_SWITCH:
        return -(1.0 + y / 2.0 + y * y / 6.0 + y * y * y / 24.0)
    return -complex(np.expm1(y)) / y if abs(y) < 1.0 else (1.0 - cmath.exp(y)) / y


def _G_raw(x, delta, h, s):
    x = np.asarray(x, dtype=complex)
    u = np.exp(-x / 2)
    k = 1j * h * x - 1
    E = np.exp(-2 * s * delta * x)
    a = h + 1j * s * delta
    b = h - 1j * s * delta

    def phi(y):
        return y * y + 2j * y - 2

    sd = s * delta
    G1 = k / x ** 2 * (2 * (1 - u) / (x / 2) - u - 1) + (h * h - delta * delta) * (1 - u) / (x / 2)
    G2 = (u * (E * (1 - 1j * a * x) - (1 - 1j * h * x))
          + sd * (x * (1 - 2 * u * u) + 4 * u * (1 - u) - 4j * h * x * u * (1 - u))) / x ** 2
    G3 = 2 / x ** 3 * (E * phi(a * x) - phi(b * x))
    G4 = -k * (1 - u) ** 2 / x ** 2 + 2 * sd * u * (1 - u) / x
    G5 = 2 * sd * (1 - u) * (2 * k * (1 - u) + x * (1 + u)) / x ** 2
    G6 = sd * (np.exp(-x) - 1) / x
    return G1, G2, G3, G4, G5, G6


def G_funcs(x: complex, delta: float, h: float, sign: int):
    """The six entire coefficient functions of the factored Q form (removable point at x = 0)."""
    s = 1 if sign >= 0 else -1
    x = complex(x)
    if abs(x) < G_SWITCH:
        return _circle_mean(lambda z: _G_raw(z, delta, h, s), x)
    return tuple(complex(g) for g in _G_raw(x, delta, h, s))


# ---------------------------------------------------------------------------
# Q_{s delta}: the generating function of the middle pieces

def _check_denoms(*ds):
    for d in ds:
        if abs(d) < DENOM_EPS:
            raise DenominatorVanishes("closed form evaluated at a vanishing denominator")


def Q_delta(x: complex, alpha: float, lam: complex, delta: float, h: float, sign: int,
            route: str = "B") -> complex:
    """Q_{s delta}(x) with f(x) = 1/(alpha e^{-x/2} - lambda), s = sign.

    Route A is the difference-quotient form (cancels catastrophically near x = 0);
    route B is the factored form through G_funcs (entire in x).
    """
    x = complex(x)
    lam = complex(lam)
    s = 1 if sign >= 0 else -1
    D = alpha * cmath.exp(-x / 2) - lam
    D0 = alpha - lam
    _check_denoms(D, D0)
    if route == "A":
        f = lambda y: 1.0 / (alpha * cmath.exp(-y / 2) - lam)
        fp = lambda y: alpha * cmath.exp(-y / 2) / (2 * (alpha * cmath.exp(-y / 2) - lam) ** 2)
        Ex = cmath.exp(-2 * s * delta * x)
        Psi, Psi0 = Ex * f(x), f(0)
        dPsi = Ex * (fp(x) - 2 * s * delta * f(x))
        dPsi0 = fp(0) - 2 * s * delta * f(0)
        k = 1j * h * x - 1
        return (k / x ** 2 * (2 * (Psi - Psi0) / x - (dPsi + dPsi0))
                + ((h * h - delta * delta) * (Psi - Psi0) + s * delta * (Ex * fp(x) - fp(0))) / x)
    if route != "B":
        raise InvalidParameter("route must be 'A' or 'B'")
    G1, G2, G3, G4, G5, G6 = G_funcs(x, delta, h, s)
    br = (D * D0 * G1 + D0 ** 2 * G2 + D0 ** 2 * D / alpha * G3 + alpha * lam * G4
          + lam * D0 * G5 + alpha ** 2 * G6)
    return alpha / (2 * D ** 2 * D0 ** 2) * br


# ---------------------------------------------------------------------------
# psi functions

def psi1p(tau, lam, rs: RSParams):
    A = 1j * tau + rs.R + rs.S
    c = rs.delta - 1j * rs.h
    return c * A + 2 * (1 - cmath.exp(-rs.R / 2) * lam) * (2 * c + c * c * A)


def psi2p(tau, lam, rs: RSParams):
    B = 1j * tau - rs.R - rs.S
    c = rs.delta + 1j * rs.h
    return -c * B + 2 * (1 - cmath.exp(-(rs.S - 1j * tau) / 2) * lam) * (2 * c - c * c * B)


def psi1m(tau, lam, rs: RSParams):
    B = 1j * tau - rs.R - rs.S
    c = rs.delta + 1j * rs.h
    return -c * B + 2 * (cmath.exp(rs.R / 2) * lam - 1) * (2 * c - c * c * B)


def psi2m(tau, lam, rs: RSParams):
    A = 1j * tau + rs.R + rs.S
    c = rs.delta - 1j * rs.h
    return c * A + 2 * (lam * cmath.exp((1j * tau + rs.S) / 2) - 1) * (2 * c + c * c * A)


def psi3p(tau, lam, rs: RSParams, route: str = "B"):
    """Generating function of the j >= 0 middle pieces (with its exponential prefactor)."""
    x = 1j * complex(tau) + rs.R - rs.S
    return cmath.exp(1j * rs.h * (rs.R - rs.S) + rs.delta * x) * Q_delta(
        x, math.exp(rs.R / 2), lam, rs.delta, rs.h, +1, route)


def psi3m(tau, lam, rs: RSParams, route: str = "B"):
    """Generating function of the j <= -1 middle pieces (with its exponential prefactor)."""
    x = 1j * complex(tau) - rs.R + rs.S
    return cmath.exp(1j * rs.h * (rs.S - rs.R) - rs.delta * x) * Q_delta(
        x, math.exp(-rs.R / 2), lam, rs.delta, rs.h, -1, route)


def psi4p(tau, rs: RSParams):
    return E_func(1j * complex(tau) + rs.R + rs.S)


def psi4m(tau, rs: RSParams):
    return E_func(1j * complex(tau) - rs.R - rs.S)


@dataclass(frozen=True)
class PsiBundle:
    psi1p: complex
    psi2p: complex
    psi1m: complex
    psi2m: complex
    psi3p: complex
    psi3m: complex
    psi4p: complex
    psi4m: complex


def psi_bundle(tau, lam, rs: RSParams) -> PsiBundle:
    return PsiBundle(psi1p(tau, lam, rs), psi2p(tau, lam, rs), psi1m(tau, lam, rs), psi2m(tau, lam, rs),
                     psi3p(tau, lam, rs), psi3m(tau, lam, rs), psi4p(tau, rs), psi4m(tau, rs))


# ---------------------------------------------------------------------------
# One-sided sums of the outer pieces, as raw (ungrouped) closed forms

def lemma_outer_pos(tau, lam, rs: RSParams) -> complex:
    """Sum over j >= 0 of (I_j + III_j) lambda^j, with explicit cubic terms."""
    t, l = complex(tau), complex(lam)
    R, S, h, d = rs.R, rs.S, rs.h, rs.delta
    A = 1j * t + R + S
    B = 1j * t - R - S
    eR = math.exp(R / 2)
    a2 = cmath.exp((S - 1j * t) / 2)
    _check_denoms(eR - l, a2 - l, A, B)
    e1 = cmath.exp(1j * h * (R + S) - d * A)
    e2 = cmath.exp(-1j * h * (R + S) - d * (R + S - 1j * t))
    return (e1 * eR * (1 + psi1p(t, l, rs)) / (2 * (eR - l) ** 2 * A ** 2)
            + e2 * a2 * (1 + psi2p(t, l, rs)) / (2 * (a2 - l) ** 2 * B ** 2)
            + 2 * e1 / ((eR - l) * A ** 3) - 2 * e2 / ((a2 - l) * B ** 3))


def lemma_outer_neg(tau, lam, rs: RSParams) -> complex:
    """Sum over j <= -1 of (I*_j + III*_j) lambda^j, with explicit cubic terms."""
    t, l = complex(tau), complex(lam)
    R, S, h, d = rs.R, rs.S, rs.h, rs.delta
    A = 1j * t + R + S
    B = 1j * t - R - S
    ieR = math.exp(-R / 2)
    a1 = cmath.exp(-(1j * t + S) / 2)
    _check_denoms(ieR - l, a1 - l, A, B)
    e1 = cmath.exp(1j * h * (R + S) - d * A)
    e2 = cmath.exp(-1j * h * (R + S) - d * (R + S - 1j * t))
    return (e2 * ieR * (1 + psi1m(t, l, rs)) / (2 * (l - ieR) ** 2 * B ** 2)
            + e1 * a1 * (1 + psi2m(t, l, rs)) / (2 * (l - a1) ** 2 * A ** 2)
            + 2 * e2 / ((ieR - l) * B ** 3) - 2 * e1 / ((a1 - l) * A ** 3))


def cubic_pair_pos(tau, lam, rs: RSParams):
    """(raw cubic pair, grouped psi4 form) of the A-exponential terms; equal as functions."""
    t, l = complex(tau), complex(lam)
    A = 1j * t + rs.R + rs.S
    eR = math.exp(rs.R / 2)
    a1 = cmath.exp(-(1j * t + rs.S) / 2)
    raw = 2 / ((eR - l) * A ** 3) - 2 / ((a1 - l) * A ** 3)
    grouped = a1 * psi4p(t, rs) / ((eR - l) * (a1 - l) * A ** 2)
    return raw, grouped


def cubic_pair_neg(tau, lam, rs: RSParams):
    """(raw cubic pair, grouped psi4 form) of the B-exponential terms; equal as functions."""
    t, l = complex(tau), complex(lam)
    B = 1j * t - rs.R - rs.S
    ieR = math.exp(-rs.R / 2)
    a2 = cmath.exp((rs.S - 1j * t) / 2)
    raw = 2 / ((ieR - l) * B ** 3) - 2 / ((a2 - l) * B ** 3)
    grouped = a2 * psi4m(t, rs) / ((ieR - l) * (a2 - l) * B ** 2)
    return raw, grouped


def script_I_terms(tau, lam, rs: RSParams, route: str = "B") -> dict:
    """The eight grouped terms whose sum is sum_j scriptI_j lambda^j.

    Keys: 'A1' (psi1+), 'A2' (psi2-), 'A4' (psi4+) share e^{ih(R+S) - delta A}/A^2;
    'B1' (psi2+), 'B2' (psi1-), 'B4' (psi4-) share e^{-ih(R+S) - delta(R+S-i tau)}/B^2;
    'Q+' and 'Q-' are the middle-piece generating functions.
    """
    t, l = complex(tau), complex(lam)
    R, S, h, d = rs.R, rs.S, rs.h, rs.delta
    A = 1j * t + R + S
    B = 1j * t - R - S
    eR = math.exp(R / 2)
    ieR = 1.0 / eR
    a1 = cmath.exp(-(1j * t + S) / 2)
    a2 = cmath.exp((S - 1j * t) / 2)
    _check_denoms(eR - l, ieR - l, a1 - l, a2 - l, A, B)
    pa = cmath.exp(1j * h * (R + S) - d * A) / A ** 2
    pb = cmath.exp(-1j * h * (R + S) - d * (R + S - 1j * t)) / B ** 2
    return {
        "A1": pa * eR * (1 + psi1p(t, l, rs)) / (2 * (eR - l) ** 2),
        "A2": pa * a1 * (1 + psi2m(t, l, rs)) / (2 * (l - a1) ** 2),
        "A4": pa * a1 * psi4p(t, rs) / ((eR - l) * (a1 - l)),
        "B1": pb * a2 * (1 + psi2p(t, l, rs)) / (2 * (a2 - l) ** 2),
        "B2": pb * ieR * (1 + psi1m(t, l, rs)) / (2 * (l - ieR) ** 2),
        "B4": pb * a2 * psi4m(t, rs) / ((ieR - l) * (a2 - l)),
        "Q+": psi3p(t, l, rs, route),
        "Q-": psi3m(t, l, rs, route),
    }


def _require_RS(tau, lam, rs: RSParams):
    if not in_reduced_domain(tau, lam, rs.R, rs.S):
        raise DomainViolation(f"(tau, lambda) = ({tau!r}, {lam!r}) outside the reduced domain")


def sum_script_I_closed(tau, lam, rs: RSParams, route: str = "B") -> complex:
    """Closed form of sum_j scriptI_j(tau) lambda^j (pieces truncated by rs.delta)."""
    _require_RS(tau, lam, rs)
    return sum(script_I_terms(tau, lam, rs, route).values())


def sum_script_I_raw(tau, lam, rs: RSParams, route: str = "B") -> complex:
    """Same sum assembled from the ungrouped outer sums (explicit cubic terms)."""
    _require_RS(tau, lam, rs)
    return (lemma_outer_pos(tau, lam, rs) + lemma_outer_neg(tau, lam, rs)
            + psi3p(tau, lam, rs, route) + psi3m(tau, lam, rs, route))


# ---------------------------------------------------------------------------
# Exact per-mode pieces (oracle for the one-sided identities)

def _prim(alpha, b, c, lo, hi):
    """int_lo^hi (xi^2 + b xi + c) e^{alpha xi} dxi; infinite limits allowed where convergent."""
    def P(x):
        if math.isinf(x):
            return 0.0
        return cmath.exp(alpha * x) * (x * x / alpha + (b / alpha - 2 / alpha ** 2) * x
                                       + c / alpha - b / alpha ** 2 + 2 / alpha ** 3)
    return P(hi) - P(lo)


def script_I_pieces(tau, j: int, rs: RSParams):
    """(I, II, III) for j >= 0, (I*, II*, III*) for j <= -1, so scriptI_j = I - II + III."""
    t = complex(tau)
    R, S, h, d = rs.R, rs.S, rs.h, rs.delta
    m = 0.5 * (j + 1)
    b = 2j * h - m
    c = 1j * h * (1j * h - m)
    A = 1j * t + R + S
    B = 1j * t - R - S
    inf = math.inf
    if j >= 0:
        I = cmath.exp(1j * h * (R + S) - R * m) * _prim(A, b, c, -inf, -d)
        II = cmath.exp(1j * h * (R - S) - R * m) * _prim(1j * t + R - S, b, c, d, m - d)
        III = cmath.exp(-1j * h * (R + S) + R * m) * _prim(B, b, c, m + d, inf)
    else:
        I = cmath.exp(1j * h * (R + S) - R * m) * _prim(A, b, c, -inf, m - d)
        II = (cmath.exp(1j * h * (S - R) + R * m) * _prim(1j * t - R + S, b, c, m + d, -d)
              if j < -1 or d > 0 else 0.0)
        III = cmath.exp(-1j * h * (R + S) + R * m) * _prim(B, b, c, d, inf)
    return I, II, III


def script_I_exact(tau, j: int, rs: RSParams) -> complex:
    I, II, III = script_I_pieces(tau, j, rs)
    return I - II + III


def script_I_integrand(xi, tau, j: int, rs: RSParams):
    """Integrand of scriptI_j at real xi (array)."""
    xi = np.asarray(xi, dtype=float)
    m = 0.5 * (j + 1)
    s1 = np.where(xi < 0, -1.0, 1.0)
    s2 = np.where(xi - m < 0, -1.0, 1.0)
    z = xi + 1j * rs.h
    return (s1 * s2 * z * (z - m)
            * np.exp(1j * complex(tau) * xi - rs.R * np.abs(xi - m) - rs.S * np.abs(xi)
                     - 1j * rs.h * (s2 * rs.R + s1 * rs.S)))


# ---------------------------------------------------------------------------
# Residue sums

def _nu_s(tau, params):
    return sgn(complex(tau).real) * params.nu


def F1(tau, lam, params: WormParams, sign: int = 1) -> complex:
    """Closed form of the bilateral sum over j != -1 of sigma e^{-i sigma pi nu} e^{i tau m - pi|m|} lambda^j."""
    t, l = complex(tau), complex(lam)
    _require_annulus(t, l)
    nu = sign * params.nu
    q = cmath.exp((1j * t - math.pi) / 2)
    p = cmath.exp(-(1j * t + math.pi) / 2)
    _check_denoms(1 - q * l, l - p, l)
    return (cmath.exp(-1j * math.pi * nu) * q / (1 - q * l) - cmath.exp(1j * math.pi * nu) / (l - p)
            + cmath.exp(1j * math.pi * nu) / l)


def F2(tau, lam, params: WormParams, sign: int = 1) -> complex:
    """Closed form of the same sum with an extra factor m = (j+1)/2; equals (1/i) dF1/dtau."""
    t, l = complex(tau), complex(lam)
    _require_annulus(t, l)
    nu = sign * params.nu
    q = cmath.exp((1j * t - math.pi) / 2)
    p = cmath.exp(-(1j * t + math.pi) / 2)
    _check_denoms(1 - q * l, l - p)
    return (0.5 * cmath.exp(-1j * math.pi * nu) * q / (1 - q * l) ** 2
            + 0.5 * cmath.exp(1j * math.pi * nu) * p / (l - p) ** 2)


def _require_annulus(tau, lam):
    ll = math.log(abs(lam)) if lam != 0 else -math.inf
    t = complex(tau).imag
    if not ((t - math.pi) / 2 < ll < (t + math.pi) / 2):
        raise AnnulusViolation("lambda outside the annulus e^{(Im tau - pi)/2} < |lambda| < e^{(Im tau + pi)/2}")


def F_direct(tau, lam, params: WormParams, which: int, sign: int = 1, tol: float = 1e-16):
    """Direct bilateral summation of the F1 (which=1) or F2 (which=2) series."""
    t, l = complex(tau), complex(lam)
    _require_annulus(t, l)
    nu = sign * params.nu
    logl = cmath.log(l)

    def term(j):
        if j == -1:
            return 0j
        m = 0.5 * (j + 1)
        sg = 1 if m > 0 else -1
        v = sg * cmath.exp(-1j * sg * math.pi * nu + 1j * t * m - math.pi * abs(m) + j * logl)
        return v * (m if which == 2 else 1.0)

    rp = abs(l) * math.exp(-(t.imag + math.pi) / 2)
    rm = math.exp((t.imag - math.pi) / 2) / abs(l)
    return mode_series(term, rp, rm, tol, min_terms=6)[0]


def _error_series(tau, lam, nu_s):
    """(E1, E2): bilateral sums over m != 0 with the geometric remainder factor."""
    t, l = complex(tau), complex(lam)
    rp = abs(l) * math.exp(-(t.imag + 3 * math.pi) / 2)
    rm = math.exp((t.imag - 3 * math.pi) / 2) / abs(l)
    n_p = int(math.ceil(40.0 / -math.log(rp))) + 2 if rp > 0 else 2
    n_m = int(math.ceil(40.0 / -math.log(rm))) + 2 if rm > 0 else 2
    j = np.concatenate([np.arange(-n_m - 1, -1), np.arange(0, n_p + 1)])
    m = 0.5 * (j + 1)
    sg = np.sign(m)
    logl = cmath.log(l)
    num = sg * np.exp(-1j * sg * math.pi * nu_s + 1j * t * m - math.pi * np.abs(m) + j * logl)
    den = np.expm1(2 * sg * (math.pi * m + 1j * math.pi * nu_s))
    e = num / den
    return complex(np.sum(e)), complex(np.sum(m * e))


def sum_R_closed(tau, lam, params: WormParams):
    """(main, error_series) with sum_j R_j lambda^j = main + error_series.

    main = e^{-nu_s tau}[phi1/(1 - q lambda)^2 + phi2/(lambda - p)^2],
    q = e^{(i tau - pi)/2}, p = e^{-(i tau + pi)/2}, nu_s = sgn(Re tau) nu.
    """
    t, l = complex(tau), complex(lam)
    if not in_reduced_domain(t, l, params.a, math.pi):
        raise DomainViolation("(tau, lambda) outside the reduced domain")
    nu = params.nu
    ns = _nu_s(t, params)
    c = nu * nu / math.pi
    q = cmath.exp((1j * t - math.pi) / 2)
    p = cmath.exp(-(1j * t + math.pi) / 2)
    _check_denoms(1 - q * l, l - p)
    phi1 = c * cmath.exp(-1j * math.pi * ns) * q * (1 + 2j * ns * (1 - q * l))
    phi2 = c * cmath.exp(1j * math.pi * ns) * (p * (1 + 2j * ns) - 2j * ns * l)
    pref = cmath.exp(-ns * t)
    main = pref * (phi1 / (1 - q * l) ** 2 + phi2 / (l - p) ** 2)
    E1, E2 = _error_series(t, l, ns)
    E = c * ((2j * ns * cmath.exp(1j * math.pi * ns) + nu / math.sin(math.pi * nu)) / l
             + 2j * ns * E1 + 2 * E2)
    return main, pref * E


def phi_terms(tau, lam, params: WormParams):
    """(phi1 term, phi2 term) of the main residue sum, each including e^{-nu_s tau}."""
    t, l = complex(tau), complex(lam)
    nu = params.nu
    ns = _nu_s(t, params)
    c = nu * nu / math.pi
    q = cmath.exp((1j * t - math.pi) / 2)
    p = cmath.exp(-(1j * t + math.pi) / 2)
    phi1 = c * cmath.exp(-1j * math.pi * ns) * q * (1 + 2j * ns * (1 - q * l))
    phi2 = c * cmath.exp(1j * math.pi * ns) * (p * (1 + 2j * ns) - 2j * ns * l)
    pref = cmath.exp(-ns * t)
    return pref * phi1 / (1 - q * l) ** 2, pref * phi2 / (l - p) ** 2


def sum_R_direct(tau, lam, params: WormParams, tol: float = 1e-14) -> complex:
    """Direct bilateral summation of residue_R_j lambda^j with a geometric tail stop."""
    t, l = complex(tau), complex(lam)
    logl = cmath.log(l)
    rp = abs(l) * math.exp(-(t.imag + math.pi) / 2)
    rm = math.exp((t.imag - math.pi) / 2) / abs(l)
    return mode_series(lambda j: residue_R_j(t, j, params) * cmath.exp(j * logl), rp, rm, tol,
                       min_terms=6)[0]


# ---------------------------------------------------------------------------
# Shifted-line sums

def sum_M_closed(tau, lam, params: WormParams, h: float | None = None) -> complex:
    """sum_j M_j lambda^j = (2/pi) e^{-eta tau} sum_j scriptI_j lambda^j, eta = sgn(Re tau) h, R = a, S = pi."""
    t = complex(tau)
    h = params.h if h is None else h
    eta = sgn(t.real) * h
    rs = RSParams(params.a, math.pi, 0.0, eta)
    return 2.0 / math.pi * cmath.exp(-eta * t) * sum_script_I_closed(t, lam, rs)


def M_terms(tau, lam, params: WormParams, h: float | None = None) -> dict:
    """The eight grouped terms of sum_M_closed, each with the (2/pi) e^{-eta tau} prefactor."""
    t = complex(tau)
    h = params.h if h is None else h
    eta = sgn(t.real) * h
    rs = RSParams(params.a, math.pi, 0.0, eta)
    pre = 2.0 / math.pi * cmath.exp(-eta * t)
    return {k: pre * v for k, v in script_I_terms(t, lam, rs).items()}


def split_mode(tau, j: int, k: int, params: WormParams, quad: QuadratureSpec | None = None,
               h: float | None = None):
    """M_j (k=0) or E_j^(k) (k=1,2,3) by quadrature along Im xi = eta, eta = sgn(Re tau) h."""
    quad = quad or QuadratureSpec()
    t = complex(tau)
    h = params.h if h is None else h
    eta = sgn(t.real) * h
    m = 0.5 * (j + 1)
    a = params.a

    def integrate(lo, hi, tol, max_subdiv, noise):
        return _backend.integrate_split(lo, hi, t, m, a, eta, k, tol, max_subdiv, noise)

    val, err = line_integral(integrate, t, m, eta, params, quad, shift_env=False)
    pre = cmath.exp(-eta * t)
    return pre * val, abs(pre) * err


def sum_E_k(tau, lam, k: int, params: WormParams, quad: QuadratureSpec | None = None,
            h: float | None = None, tol: float | None = None) -> complex:
    """Direct summation of E_j^(k)(tau) lambda^j over j by quadrature of each term."""
    if k not in (1, 2, 3):
        raise InvalidParameter("k must be 1, 2 or 3")
    return sum_split_modes(tau, lam, k, params, quad, h, tol)[0]


def sum_split_modes(tau, lam, k: int, params: WormParams, quad: QuadratureSpec | None = None,
                    h: float | None = None, tol: float | None = None):
    """(value, tail_bound) of sum_j X_j lambda^j for X = M (k=0) or E^(k)."""
    quad = quad or QuadratureSpec()
    t, l = complex(tau), complex(lam)
    if not in_reduced_domain(t, l, params.a, math.pi):
        raise DomainViolation("(tau, lambda) outside the reduced domain")
    logl = cmath.log(l)
    rp, rm = mode_ratios(t, l, params)
    tol = quad.tol * 10 if tol is None else tol
    val, tail, _ = mode_series(lambda j: split_mode(t, j, k, params, quad, h)[0] * cmath.exp(j * logl),
                               rp, rm, tol)
    return val, tail
