"""Worm-domain parameters, membership predicates and the map Phi.

D'_beta (strip slices):   |Im z1 - log|z2|^2| < pi/2,  |log|z2|^2| < beta - pi/2
D_beta  (half-plane slices): Re(zeta1 e^{-i log|zeta2|^2}) > 0,  |log|zeta2|^2| < beta - pi/2
Phi(z1, z2) = (e^{z1}, z2) maps D'_beta onto D_beta.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainViolation, InvalidParameter

HALF_PI = 0.5 * math.pi


def sgn(x: float) -> int:
    """Sign with the convention sgn(0) = +1 used for contour and branch choices."""
    return -1 if x < 0 else 1


@dataclass(frozen=True)
class WormParams:
    beta: float
    nu: float
    h: float
    c0: float

    def __post_init__(self):
        if not (self.beta > math.pi):
            raise InvalidParameter(f"beta must exceed pi (got {self.beta!r})")
        if self.nu != math.pi / (2.0 * self.beta - math.pi):
            raise InvalidParameter("nu must equal pi/(2 beta - pi); use make_params")
        lo, hi = self.h_window
        if not (lo < self.h < hi):
            raise InvalidParameter(f"h={self.h!r} outside ({lo!r}, {hi!r})")
        if not (self.c0 > 0):
            raise InvalidParameter("c0 must be positive")

    @property
    def nu_beta(self) -> float:
        return self.nu

    @property
    def a(self) -> float:
        """2 beta - pi, the rate of the second sinh factor (a * nu = pi)."""
        return 2.0 * self.beta - math.pi

    @property
    def half_width(self) -> float:
        """beta - pi/2, the bound on |log|z2|^2|."""
        return self.beta - HALF_PI

    @property
    def h_window(self) -> tuple[float, float]:
        return self.nu, min(1.0, 2.0 * self.nu)

    def pole_line_margin(self, h: Optional[float] = None) -> float:
        """Distance from the line Im xi = h to the nearest pole row of g_j."""
        h = self.h if h is None else h
        return min(h - self.nu, 2.0 * self.nu - h, 1.0 - h)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "nu_beta": self.nu, "h": self.h, "c0": self.c0}


def make_params(beta: float, h: Optional[float] = None, c0: Optional[float] = None) -> WormParams:
    beta = float(beta)
    if not math.isfinite(beta) or beta <= math.pi:
        raise InvalidParameter(f"beta must exceed pi (got {beta!r}); nu_beta >= 1 otherwise")
    nu = math.pi / (2.0 * beta - math.pi)
    if h is None:
        h = 0.5 * (nu + min(1.0, 2.0 * nu))
    if c0 is None:
        c0 = 1.0
    params = WormParams(beta=beta, nu=nu, h=float(h), c0=float(c0))
    if params.pole_line_margin() <= 0:
        raise InvalidParameter("shift h touches a pole row")
    return params


def lp_range(params: WormParams) -> tuple[float, float]:
    """Open interval of p for which the Bergman projection is L^p bounded."""
    nu = params.nu
    return 2.0 / (1.0 + nu), 2.0 / (1.0 - nu)


@dataclass(frozen=True)
class StripPoint:
    z1: complex
    z2: complex


@dataclass(frozen=True)
class WormPoint:
    zeta1: complex
    zeta2: complex


@dataclass(frozen=True)
class TauLambda:
    tau: complex
    lam: complex

    def in_domain(self, params: WormParams) -> bool:
        return in_reduced_domain(self.tau, self.lam, params.a, math.pi)


def _log_mod_sq(z: complex) -> float:
    return 2.0 * math.log(abs(z))


def distance_to_boundary(p: StripPoint, params: WormParams) -> float:
    """Smallest slack in the defining inequalities of D'_beta (negative outside)."""
    if p.z2 == 0:
        return -math.inf
    L = _log_mod_sq(p.z2)
    return min(HALF_PI - abs(complex(p.z1).imag - L), params.half_width - abs(L))


def in_strip_worm(p: StripPoint, params: WormParams) -> bool:
    if p.z2 == 0:
        return False
    L = _log_mod_sq(p.z2)
    return abs(complex(p.z1).imag - L) < HALF_PI and abs(L) < params.half_width


def in_halfplane_worm(q: WormPoint, params: WormParams) -> bool:
    if q.zeta2 == 0:
        return False
    L = _log_mod_sq(q.zeta2)
    if not abs(L) < params.half_width:
        return False
    return (complex(q.zeta1) * cmath.exp(-1j * L)).real > 0


def phi_map(p: StripPoint) -> WormPoint:
    return WormPoint(cmath.exp(p.z1), complex(p.z2))


def branch_log(zeta1: complex, zeta2: complex) -> complex:
    """log zeta1 with arg in the window (log|zeta2|^2 - pi/2, log|zeta2|^2 + pi/2)."""
    if zeta1 == 0:
        raise DomainViolation("zeta1 = 0: logarithm undefined")
    L = _log_mod_sq(zeta2)
    arg = cmath.phase(complex(zeta1) * cmath.exp(-1j * L)) + L
    return complex(math.log(abs(zeta1)), arg)


def phi_inverse(q: WormPoint, params: WormParams) -> StripPoint:
    if q.zeta1 == 0:
        raise DomainViolation("zeta1 = 0: logarithm undefined")
    if not in_halfplane_worm(q, params):
        raise DomainViolation("point is not in D_beta")
    return StripPoint(branch_log(q.zeta1, q.zeta2), complex(q.zeta2))


def reduce(z: StripPoint, w: StripPoint) -> TauLambda:
    """Reduced coordinates tau = z1 - conj(w1), lambda = z2 conj(w2)."""
    return TauLambda(complex(z.z1) - complex(w.z1).conjugate(), complex(z.z2) * complex(w.z2).conjugate())


def in_reduced_domain(tau: complex, lam: complex, R: float, S: float) -> bool:
    """Membership in D_{R,S}: |Im tau - log|lam|^2| < S and e^{-R/2} < |lam| < e^{R/2}."""
    if lam == 0:
        return False
    L = _log_mod_sq(lam)
    return abs(complex(tau).imag - L) < S and abs(L) < R


def reduced_margins(tau: complex, lam: complex, R: float, S: float) -> tuple[float, float]:
    """Slack (in log|lam| units) of the two conditions defining D_{R,S}."""
    if lam == 0:
        return -math.inf, -math.inf
    ll = math.log(abs(lam))
    t = complex(tau).imag
    return 0.5 * S - abs(0.5 * t - ll), 0.5 * R - abs(ll)


def require_reduced(tau: complex, lam: complex, params: WormParams) -> None:
    if not in_reduced_domain(tau, lam, params.a, math.pi):
        raise DomainViolation(f"(tau, lambda) = ({tau!r}, {lam!r}) is outside the reduced domain")
