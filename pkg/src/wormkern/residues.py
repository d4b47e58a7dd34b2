"""Contour-shift decomposition I_j = R_j + J_j of the mode integrals.

Moving the line of integration from the real axis to Im xi = s h
(s = sgn Re tau, sgn(0) = +1) crosses exactly one pole of g_j, at
xi0 = (j+1)/2 + i s nu. With the orientation of the closed contour,

    R_j(tau) = s * 2 pi i * Res_{xi0} g_j = (nu^2/pi) xi0 e^{i tau xi0} / sinh(pi xi0),
    J_j(tau) = integral of g_j(xi + i s h) over real xi.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import backend as _backend
from .errors import InvalidParameter, PoleLineCollision
from .geometry import WormParams, sgn
from .modes import ModeResult, QuadratureSpec, compute_I_j, line_integral

CONVENTIONS = ("oracle", "lemma", "proof")


@dataclass(frozen=True)
class PoleSpec:
    location: complex
    sign: int
    j: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


def pole_spec(tau: complex, j: int, params: WormParams) -> PoleSpec:
    """The pole crossed by the contour shift for this tau."""
    s = sgn(complex(tau).real)
    return PoleSpec(complex(0.5 * (j + 1), s * params.nu), s, j)


def residue_R_j(tau: complex, j: int, params: WormParams, convention: str = "oracle") -> complex:
    """Residue contribution R_j(tau) of the crossed pole.

    ``convention='oracle'`` is the value that reproduces the numeric contour
    integral. ``'lemma'`` and ``'proof'`` are the two alternative closed forms
    with middle factors (nu - i s m) and (nu + i s m); they differ from the
    oracle value (the first by exactly a factor i s) and are kept for reporting.
    """
    t = complex(tau)
    nu = params.nu
    s = sgn(t.real)
    m = 0.5 * (j + 1)
    if convention == "oracle":
        xi0 = complex(m, s * nu)
        return nu * nu / math.pi * xi0 * cmath.exp(1j * t * xi0) / cmath.sinh(math.pi * xi0)
    denom = cmath.sinh(complex(math.pi * m, s * nu * math.pi))
    pref = nu * nu / math.pi * cmath.exp(-s * nu * t + 1j * t * m) / denom
    if convention == "lemma":
        return pref * complex(nu, -s * m)
    if convention == "proof":
        return pref * complex(nu, s * m)
    raise InvalidParameter(f"unknown residue convention {convention!r}; expected one of {CONVENTIONS}")


def g_complex(z, tau: complex, j: int, params: WormParams):
    """g_j at complex points away from the removable points (direct product form)."""
    z = np.asarray(z, dtype=complex)
    m = 0.5 * (j + 1)
    return (np.exp(1j * complex(tau) * z) * z * (z - m)
            / (np.sinh(math.pi * z) * np.sinh(params.a * (z - m))) / (2.0 * math.pi))


def residue_contour_oracle(tau: complex, j: int, params: WormParams, n_nodes: int = 512,
                           radius: Optional[float] = None) -> complex:
    """s * 2 pi i * Res by the trapezoid rule on a circle around the crossed pole."""
    pole = pole_spec(tau, j, params)
    r = min(0.1, 0.5 * params.nu) if radius is None else radius
    theta = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
    dz = r * np.exp(1j * theta)
    vals = g_complex(pole.location + dz, tau, j, params)
    # (1/2 pi i) contour integral = mean of g * (z - z0)
    res = complex(np.mean(vals * dz))
    return pole.sign * 2j * math.pi * res


def _check_shift(h: float, params: WormParams, j: int) -> None:
    """Reject shifts whose line passes within 1e-9 of a pole row."""
    ah = abs(h)
    if ah == 0.0:
        return
    k = round(ah)
    if k >= 1 and abs(ah - k) < 1e-9:
        raise PoleLineCollision(f"shift {h!r} lies on the pole row Im xi = {k}")
    k = round(ah / params.nu)
    if k >= 1 and abs(ah - k * params.nu) < 1e-9:
        raise PoleLineCollision(f"shift {h!r} lies on the pole row Im xi = {k} nu")


def compute_J_j(tau: complex, j: int, params: WormParams, quad: QuadratureSpec | None = None,
                h_override: Optional[float] = None) -> ModeResult:
    """J_j(tau): integral of g_j along Im xi = sgn(Re tau) h."""
    quad = quad or QuadratureSpec()
    t = complex(tau)
    h = params.h if h_override is None else float(h_override)
    _check_shift(h, params, j)
    if h == 0.0:
        return compute_I_j(t, j, params, quad)
    eta = sgn(t.real) * h
    m = 0.5 * (j + 1)
    a = params.a
    pe = quad.pole_eps

    def integrate(lo, hi, tol, max_subdiv, noise):
        return _backend.integrate_mode(lo, hi, t, m, a, eta, pe, tol, max_subdiv, noise)

    val, err = line_integral(integrate, t, m, eta, params, quad)
    return ModeResult(j, val, err)


@dataclass(frozen=True)
class DecompositionRow:
    j: int
    I: complex
    R: complex
    J: complex
    defect: float
    err_I: float
    err_J: float

    @property
    def rel_defect(self) -> float:
        return self.defect / max(abs(self.I), 1e-300)


def decompose_modes(tau: complex, j_range: Iterable[int], params: WormParams,
                    quad: QuadratureSpec | None = None, convention: str = "oracle") -> list[DecompositionRow]:
    """Per-mode check of I_j = R_j + J_j."""
    quad = quad or QuadratureSpec()
    rows = []
    for j in j_range:
        I = compute_I_j(tau, j, params, quad)
        J = compute_J_j(tau, j, params, quad)
        R = residue_R_j(tau, j, params, convention)
        rows.append(DecompositionRow(j, I.value, R, J.value, abs(I.value - R - J.value),
                                     I.err_estimate, J.err_estimate))
    return rows
