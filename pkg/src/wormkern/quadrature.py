"""Vectorized adaptive Gauss-Kronrod (10/21) integration on a finite union of intervals.

``adaptive_raw`` is the reference refinement loop over any
``panel(lo, hi) -> (kronrod, |kronrod - gauss|, l1)`` function on arrays of
subintervals. The compiled backend runs the same loop in C; both report a
status code that ``check`` turns into an exception.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceNotMet

EPS = np.finfo(float).eps
# Round-off floor relative to the L1 norm of the integrand on the window.
NOISE_FACTOR = 50.0 * EPS

OK, BUDGET, NONFINITE = 0, 1, 2


@dataclass
class QuadResult:
    value: complex
    err: float
    l1: float
    n_intervals: int


def initial_mesh(breaks, max_len):
    """Split [breaks[0], breaks[-1]] at every break point into pieces of length <= max_len."""
    lo, hi = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        n = max(1, int(math.ceil((b - a) / max_len)))
        edges = np.linspace(a, b, n + 1)
        lo.append(edges[:-1])
        hi.append(edges[1:])
    return np.concatenate(lo), np.concatenate(hi)


def adaptive_raw(panel, lo, hi, tol, max_subdiv, noise=NOISE_FACTOR):
    """Refine until the summed Kronrod-Gauss gap is below max(tol |value|, noise L1).

    Every interval whose error exceeds its even share of half the target is
    bisected. Returns (value, err, l1, n_intervals, status, target).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    val, err, l1 = panel(lo, hi)
    while True:
        total = complex(val.sum())
        e = float(err.sum())
        L1 = float(l1.sum())
        target = max(tol * abs(total), noise * L1)
        if not math.isfinite(e):
            return total, e, L1, lo.size, NONFINITE, target
        if e <= target:
            return total, max(e, noise * L1), L1, lo.size, OK, target
        n = lo.size
        bad = err > 0.5 * target / n
        if n + int(bad.sum()) > max(max_subdiv, n):
            return total, e, L1, n, BUDGET, target
        blo, bhi = lo[bad], hi[bad]
        mid = 0.5 * (blo + bhi)
        nlo = np.concatenate([blo, mid])
        nhi = np.concatenate([mid, bhi])
        nv, ne, nl = panel(nlo, nhi)
        keep = ~bad
        lo = np.concatenate([lo[keep], nlo])
        hi = np.concatenate([hi[keep], nhi])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])
        l1 = np.concatenate([l1[keep], nl])


def check(raw, max_subdiv) -> QuadResult:
    value, err, l1, n, status, target = raw
    if status == NONFINITE:
        raise ToleranceNotMet("non-finite integrand values")
    if status == BUDGET:
        raise ToleranceNotMet(f"max_subdiv={max_subdiv} reached (err={err:.3e}, target={target:.3e})")
    return QuadResult(complex(value), float(err), float(l1), int(n))


@dataclass(frozen=True)
class TanhSinhRule:
    """Double-exponential rule on (-1, 1) with endpoint distances kept exactly.

    ``dl = 1 + x`` and ``dr = 1 - x`` are computed without cancellation so that
    integrands with endpoint singularities can be evaluated at nodes within
    ``eps`` of either end.
    """
    x: np.ndarray
    dl: np.ndarray
    dr: np.ndarray
    w: np.ndarray

    def mapped(self, a, b):
        """(left offsets, right offsets, weights) on [a, b]; a, b may be arrays (broadcast on a new last axis)."""
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        half = 0.5 * (b - a)
        return half * self.dl, half * self.dr, half * self.w


def tanh_sinh(step: float, eps: float) -> TanhSinhRule:
    """Nodes k*step up to the point where the distance to the endpoint reaches eps."""
    umax = 0.5 * math.log(2.0 / eps - 1.0)
    tmax = math.asinh(2.0 * umax / math.pi)
    n = int(math.ceil(tmax / step))
    t = step * np.arange(-n, n + 1)
    u = 0.5 * math.pi * np.sinh(t)
    e = np.exp(-2.0 * np.abs(u))
    small = 2.0 * e / (1.0 + e)          # distance to the nearer endpoint
    dr = np.where(u >= 0, small, 2.0 - small)
    dl = 2.0 - dr
    w = step * 0.5 * math.pi * np.cosh(t) * 4.0 * e / (1.0 + e) ** 2
    return TanhSinhRule(dl - 1.0, dl, dr, w)
