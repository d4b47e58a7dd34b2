"""Bergman kernel of the strip-sliced worm D'_beta by three routes, and of D_beta by transfer.

In reduced coordinates tau = z1 - conj(w1), lambda = z2 conj(w2):

    K'(z, w) = sum_j I_j(tau) lambda^j                      (brute)
             = sum_j R_j lambda^j + sum_j M_j lambda^j + sum_k sum_j E_j^(k) lambda^j   (split)

The expansion route blends an unshifted (h = 0) evaluation near Re tau = 0 with
the shifted one (residue part plus e^{-h|Re tau|}-suppressed part) away from it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DomainViolation, InvalidParameter, NumericFailure
from .geometry import (HALF_PI, StripPoint, TauLambda, WormParams, WormPoint, in_strip_worm,
                       phi_inverse, reduce, require_reduced, sgn)
from .modes import QuadratureSpec, compute_I_j, mode_ratios, mode_series
from .series import M_terms, phi_terms, sum_R_closed, sum_split_modes

ROUTES = ("brute", "split", "expansion")
TERM_NAMES = ("K1", "K2", "K3", "K4", "K5", "K6", "K7", "K8")
# grouped closed-form term -> kernel term label
_TERM_MAP = {"A1": "K1", "A2": "K2", "Q+": "K3", "B1": "K4", "B2": "K5", "Q-": "K6", "A4": "K7", "B4": "K8"}


@lru_cache(maxsize=65536)
def _I_cached(tau: complex, j: int, beta: float, quad: QuadratureSpec):
    from .geometry import make_params
    r = compute_I_j(tau, j, make_params(beta), quad)
    return r.value, r.err_estimate


def clear_cache() -> None:
    _I_cached.cache_clear()


def _tl(z: StripPoint, w: StripPoint, params: WormParams) -> TauLambda:
    for p in (z, w):
        if not in_strip_worm(p, params):
            raise DomainViolation(f"{p!r} is not in D'_beta")
    return reduce(z, w)


def brute_sum(tau: complex, lam: complex, params: WormParams, quad: QuadratureSpec | None = None,
              j_max: Optional[int] = None, tol: Optional[float] = None):
    """(value, error estimate, (j_lo, j_hi)) of sum_j I_j(tau) lambda^j."""
    quad = quad or QuadratureSpec()
    t, l = complex(tau), complex(lam)
    require_reduced(t, l, params)
    tol = 10 * quad.tol if tol is None else tol
    logl = cmath.log(l)
    errs = []

    def term(j):
        v, e = _I_cached(t, j, params.beta, quad)
        w = cmath.exp(j * logl)
        errs.append(e * abs(w))
        return v * w

    rp, rm = mode_ratios(t, l, params)
    val, tail, jr = mode_series(term, rp, rm, tol, j_max=j_max)
    return val, tail + sum(errs), jr


def kernel_brute(z: StripPoint, w: StripPoint, params: WormParams, quad: QuadratureSpec | None = None,
                 j_max: Optional[int] = None) -> complex:
    """K'(z, w) by direct summation of the mode integrals."""
    tl = _tl(z, w, params)
    return brute_sum(tl.tau, tl.lam, params, quad, j_max)[0]


def split_sum(tau: complex, lam: complex, params: WormParams, quad: QuadratureSpec | None = None):
    """Residue closed form plus the shifted-line sums; returns a dict of the parts."""
    quad = quad or QuadratureSpec()
    t, l = complex(tau), complex(lam)
    require_reduced(t, l, params)
    main, err = sum_R_closed(t, l, params)
    mterms = M_terms(t, l, params)
    es = [sum_split_modes(t, l, k, params, quad)[0] for k in (1, 2, 3)]
    return {"residue_main": main, "residue_error": err, "M": sum(mterms.values()),
            "M_terms": mterms, "E": es}


def kernel_split(z: StripPoint, w: StripPoint, params: WormParams, quad: QuadratureSpec | None = None) -> complex:
    """K'(z, w) as residue sum plus shifted-line sum."""
    tl = _tl(z, w, params)
    parts = split_sum(tl.tau, tl.lam, params, quad)
    return parts["residue_main"] + parts["residue_error"] + parts["M"] + sum(parts["E"])


def cutoff_weights(x: float, c0: float) -> tuple[float, float]:
    """(chi1, chi2): chi1 = 1 on |x| <= c0, 0 on |x| >= 2 c0, C^2 smoothstep between."""
    u = (abs(x) - c0) / c0
    u = min(1.0, max(0.0, u))
    chi1 = 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)
    return chi1, 1.0 - chi1


@dataclass
class KernelBreakdown:
    terms: dict
    error_term: complex
    phi_terms: tuple
    cutoff_weights: tuple
    leading_factor: complex
    total: complex
    route: str = "expansion"
    bounded_part: complex = 0j
    shifted_part: complex = 0j
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: [v.real, v.imag] for k, v in self.terms.items()}
        return {
            "route": self.route,
            "terms": d,
            "error_term": [self.error_term.real, self.error_term.imag],
            "phi_terms": [[p.real, p.imag] for p in self.phi_terms],
            "cutoff_weights": list(self.cutoff_weights),
            "leading_factor": [self.leading_factor.real, self.leading_factor.imag],
            "total": [self.total.real, self.total.imag],
        }


def expansion_at(tau: complex, lam: complex, params: WormParams, quad: QuadratureSpec | None = None) -> KernelBreakdown:
    """Expansion breakdown at reduced coordinates."""
    quad = quad or QuadratureSpec()
    t, l = complex(tau), complex(lam)
    require_reduced(t, l, params)
    chi1, chi2 = cutoff_weights(t.real, params.c0)
    terms = {k: 0j for k in TERM_NAMES}
    err = 0j
    bounded = shifted = 0j
    phis = (0j, 0j)
    if chi1 > 0:
        mt = M_terms(t, l, params, h=0.0)
        eb = sum(sum_split_modes(t, l, k, params, quad, h=0.0)[0] for k in (1, 2, 3))
        for key, v in mt.items():
            terms[_TERM_MAP[key]] += chi1 * v
        err += chi1 * eb
        bounded = sum(mt.values()) + eb
    if chi2 > 0:
        mt = M_terms(t, l, params)
        es = sum(sum_split_modes(t, l, k, params, quad)[0] for k in (1, 2, 3))
        p1, p2 = phi_terms(t, l, params)
        _, rerr = sum_R_closed(t, l, params)
        for key, v in mt.items():
            terms[_TERM_MAP[key]] += chi2 * v
        err += chi2 * (es + rerr)
        phis = (chi2 * p1, chi2 * p2)
        shifted = sum(mt.values()) + es + p1 + p2 + rerr
    total = sum(terms.values()) + err + phis[0] + phis[1]
    lead = cmath.exp(-sgn(t.real) * params.nu * t)
    return KernelBreakdown(terms, err, phis, (chi1, chi2), lead, total, "expansion", bounded, shifted)


def kernel_expansion(z: StripPoint, w: StripPoint, params: WormParams,
                     quad: QuadratureSpec | None = None) -> KernelBreakdown:
    """Cutoff-blended expansion K' = chi1 K_b + chi2 (shifted part + residue part)."""
    tl = _tl(z, w, params)
    return expansion_at(tl.tau, tl.lam, params, quad)


def kernel_strip(z: StripPoint, w: StripPoint, params: WormParams, route: str = "brute",
                 quad: QuadratureSpec | None = None) -> complex:
    if route == "brute":
        return kernel_brute(z, w, params, quad)
    if route == "split":
        return kernel_split(z, w, params, quad)
    if route == "expansion":
        return kernel_expansion(z, w, params, quad).total
    raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")


def kernel_D_beta(zeta: WormPoint, omega: WormPoint, params: WormParams, route: str = "brute",
                  quad: QuadratureSpec | None = None) -> complex:
    """Kernel of the half-plane-sliced worm by the biholomorphic transfer rule."""
    if zeta.zeta1 == 0 or omega.zeta1 == 0:
        raise DomainViolation("zeta1 = 0 or omega1 = 0")
    z = phi_inverse(zeta, params)
    w = phi_inverse(omega, params)
    return kernel_strip(z, w, params, route, quad) / (complex(zeta.zeta1) * complex(omega.zeta1).conjugate())


# ---------------------------------------------------------------------------
# Singular loci

FACES = ("top", "bottom", "left", "right", "interior")
# faces on which each closed-form term's denominators vanish (from the denominators themselves)
FACE_TERMS = {
    "top": ("K1", "K3", "K7"),
    "bottom": ("K5", "K6", "K8"),
    "right": ("K2", "K6", "K7"),
    "left": ("K4", "K3", "K8"),
    "interior": (),
}


def face_point(face: str, d: float, params: WormParams, re_z1: float = 0.0, theta: float = 0.0) -> StripPoint:
    """Point at slack d from a face of the (Im z1, log|z2|^2) section; centered otherwise."""
    hw = params.half_width
    if face == "top":
        L = hw - d
        y = L
    elif face == "bottom":
        L = -hw + d
        y = L
    elif face == "right":
        L = 0.0
        y = HALF_PI - d
    elif face == "left":
        L = 0.0
        y = -HALF_PI + d
    elif face == "interior":
        L, y = 0.0, 0.0
    else:
        raise ValueError(f"unknown face {face!r}; expected one of {FACES}")
    return StripPoint(complex(re_z1, y), math.exp(L / 2) * cmath.exp(1j * theta))


@dataclass
class LocusRow:
    slack: float
    tau: complex
    lam: complex
    abs_terms: dict
    abs_total: float


def singular_locus_report(w: StripPoint, params: WormParams, face: str, slacks=None,
                          offset: float = 3.0, with_total: bool = False,
                          quad: QuadratureSpec | None = None) -> dict:
    """Evaluate |K_i| along a path on which z and w both approach a face.

    w fixes Re w1 and arg w2; z is offset by ``offset`` in Re z1 (off the
    boundary diagonal). arg z2 is chosen so that arg lambda is the phase at
    which the face's denominators can vanish: 0 on the top and bottom faces
    (e^{+-hw} - lambda), -Re tau / 2 on the oblique faces (1 - q lambda and
    lambda - p). Terms with growth factor > 10 along the path are classified
    singular.
    """
    if not in_strip_worm(w, params):
        raise DomainViolation("w is not in D'_beta")
    slacks = list(np.geomspace(0.3, 1e-4, 13)) if slacks is None else list(slacks)
    rows = []
    re_w = complex(w.z1).real
    th_w = cmath.phase(complex(w.z2))
    for d in slacks:
        dth = -0.5 * offset if face in ("left", "right") else 0.0
        zz = face_point(face, d, params, re_w + offset, th_w + dth)
        ww = face_point(face, d, params, re_w, th_w)
        tl = reduce(zz, ww)
        mt = M_terms(tl.tau, tl.lam, params)
        terms = {_TERM_MAP[k]: abs(v) for k, v in mt.items()}
        tot = float("nan")
        if with_total:
            try:
                tot = abs(kernel_split(zz, ww, params, quad))
            except NumericFailure:
                pass
        rows.append(LocusRow(float(d), tl.tau, tl.lam, terms, tot))
    growth = {k: rows[-1].abs_terms[k] / max(rows[0].abs_terms[k], 1e-300) for k in TERM_NAMES}
    singular = sorted(k for k, g in growth.items() if g > 10.0)
    return {"face": face, "rows": rows, "growth": growth, "singular": singular,
            "expected": sorted(FACE_TERMS[face])}


# ---------------------------------------------------------------------------
# Far-field decay


@dataclass
class DecayFit:
    slope: float
    intercept: float
    x: np.ndarray
    abs_k: np.ndarray
    sign: int
    route: str

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "sign": self.sign, "route": self.route,
                "x": self.x.tolist(), "abs_k": self.abs_k.tolist()}


def decay_slope(params: WormParams, x_range: tuple = (10.0, 50.0), sign: int = 1, route: str = "expansion",
                slack: float = 0.3, quad: QuadratureSpec | None = None) -> DecayFit:
    """Least-squares slope of log|K'| against |Re tau| along tau = sign x, lambda fixed.

    The principal part is e^{-nu|x|} times a 4 pi-periodic factor, so samples are
    spaced by 4 pi. lambda sits at log-slack ``slack`` from the dominant pole
    (1/q for x > 0, p for x < 0) at the first sample, which keeps the periodic
    factor large and the e^{-h|x|} corrections relatively small.
    """
    lo, hi = x_range
    if not 0 <= lo < hi:
        raise InvalidParameter("x_range must satisfy 0 <= lo < hi")
    xs = lo + 4.0 * math.pi * np.arange(int((hi - lo) // (4.0 * math.pi)) + 1)
    if xs.size < 2:
        raise InvalidParameter("x_range must span at least one period 4 pi")
    s = 1 if sign >= 0 else -1
    t0 = s * xs[0]
    if s > 0:
        lam = cmath.exp(-(1j * t0 - math.pi) / 2) * math.exp(-slack)
    else:
        lam = cmath.exp(-(1j * t0 + math.pi) / 2) * math.exp(slack)
    vals = []
    for x in xs:
        tau = complex(s * x, 0.0)
        if route == "expansion":
            v = expansion_at(tau, lam, params, quad).total
        elif route == "split":
            parts = split_sum(tau, lam, params, quad)
            v = parts["residue_main"] + parts["residue_error"] + parts["M"] + sum(parts["E"])
        elif route == "brute":
            v = brute_sum(tau, lam, params, quad)[0]
        else:
            raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")
        vals.append(abs(v))
    vals = np.array(vals)
    slope, icpt = np.polyfit(xs, np.log(vals), 1)
    return DecayFit(float(slope), float(icpt), xs, vals, s, route)
