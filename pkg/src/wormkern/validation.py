"""Validation suites: each compares a closed form or fast route against an independent oracle.

A suite returns a dict with its name, an overall pass flag and one entry per check
(measured defect, tolerance, pass flag). Suites are module-level functions so they
can be shipped to worker processes.
"""
from __future__ import annotations

import cmath
import math
import time

import numpy as np

from .errors import NoValidB, WormkernError
from .geometry import StripPoint, WormParams, lp_range, make_params
from .modes import QuadratureSpec, weight_lambda_j

SUITES = ("decomposition", "series", "kernel-routes", "lp", "scaling")


def _check(name, measured, tol, cmp="lt", **extra):
    measured = float(measured)
    if cmp == "lt":
        ok = measured < tol
    elif cmp == "abs_le":
        ok = abs(measured) <= tol
    else:
        raise ValueError(cmp)
    d = {"name": name, "measured": measured, "tolerance": float(tol), "passed": bool(ok)}
    d.update(extra)
    return d


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _random_tau_lambda(rng, params, re=(0.5, 4.0), margin=0.3):
    while True:
        t = rng.choice([-1.0, 1.0]) * rng.uniform(*re) + 1j * rng.uniform(-1.5, 1.5)
        ll = rng.uniform(-params.a / 2 + margin, params.a / 2 - margin)
        if abs(t.imag / 2 - ll) < math.pi / 2 - margin:
            return complex(t), math.exp(ll) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))


def _random_strip_point(rng, params, margin=0.35, re=(-1.0, 1.0)):
    hw = params.half_width
    L = rng.uniform(-hw + margin, hw - margin)
    y = L + rng.uniform(-math.pi / 2 + margin, math.pi / 2 - margin)
    return StripPoint(complex(rng.uniform(*re), y), math.exp(L / 2) * cmath.exp(1j * rng.uniform(0, 2 * math.pi)))


def suite_decomposition(params: WormParams, tol: float = 1e-10, seed: int = 0) -> dict:
    """I_j = R_j + J_j per mode, and the residue closed form against a contour oracle."""
    from .residues import decompose_modes, residue_R_j, residue_contour_oracle
    quad = QuadratureSpec(tol=tol)
    taus = (0.5 + 0.3j, -0.5 - 0.8j, 3.0 - 0.7j, -4.0 + 1.0j)
    worst_d = worst_r = 0.0
    worst_lemma = worst_proof = 0.0
    for tau in taus:
        for row in decompose_modes(tau, range(-4, 5), params, quad):
            worst_d = max(worst_d, row.rel_defect)
        for j in range(-4, 5):
            orc = residue_contour_oracle(tau, j, params)
            worst_r = max(worst_r, _rel(residue_R_j(tau, j, params), orc))
            worst_lemma = max(worst_lemma, _rel(residue_R_j(tau, j, params, "lemma"), orc))
            worst_proof = max(worst_proof, _rel(residue_R_j(tau, j, params, "proof"), orc))
    checks = [
        _check("I_j = R_j + J_j (max rel defect)", worst_d, 1e-6),
        _check("residue closed form vs contour oracle", worst_r, 1e-8),
        {"name": "printed residue variants (informational)", "lemma_rel_defect": worst_lemma,
         "proof_rel_defect": worst_proof, "passed": True},
    ]
    return {"suite": "decomposition", "checks": checks}


def suite_series(params: WormParams, tol: float = 1e-10, seed: int = 0) -> dict:
    """Residue and shifted-line closed forms against direct summation."""
    from .series import (F1, F2, Q_delta, RSParams, cubic_pair_pos, script_I_exact, sum_R_closed, sum_R_direct,
                         sum_script_I_closed)
    rng = np.random.default_rng(seed)
    w = dict(R=0.0, F2=0.0, scriptI=0.0, AB=0.0)
    for _ in range(6):
        t, l = _random_tau_lambda(rng, params)
        main, err = sum_R_closed(t, l, params)
        w["R"] = max(w["R"], _rel(main + err, sum_R_direct(t, l, params)))
        hh = 1e-5
        dF = (F1(t + hh, l, params) - F1(t - hh, l, params)) / (2 * hh) / 1j
        w["F2"] = max(w["F2"], _rel(dF, F2(t, l, params)))
        for h, d in ((0.7, 0.0), (-0.6, 0.05)):
            rs = RSParams(params.a, math.pi, d, h)
            exact = sum(script_I_exact(t, j, rs) * l ** j for j in range(-120, 120))
            c = sum_script_I_closed(t, l, rs)
            w["scriptI"] = max(w["scriptI"], _rel(c, exact))
            w["AB"] = max(w["AB"], _rel(sum_script_I_closed(t, l, rs, "A"), c))
    fin = asym = cub = 0.0
    alpha = math.exp(params.a / 2)
    for x in (1e-6, 1e-7, 1e-8, 1e-9):
        qp = Q_delta(x, alpha, 0.9 * cmath.exp(0.4j), 0.05, 0.7, 1, "B")
        qm = Q_delta(-x, alpha, 0.9 * cmath.exp(0.4j), 0.05, 0.7, 1, "B")
        fin = max(fin, abs(qp), abs(qm))
        asym = max(asym, _rel(qp, qm))
    rs = RSParams(params.a, math.pi, 0.0, 0.7)
    for eps in (1e-1, 1e-2, 1e-3):
        raw, grouped = cubic_pair_pos(1j * (rs.R + rs.S) + eps, 0.9, rs)
        cub = max(cub, _rel(raw, grouped))
    checks = [
        _check("residue sum closed vs direct", w["R"], 1e-8),
        _check("F2 vs numeric dF1/dtau", w["F2"], 1e-6),
        _check("shifted-line closed form vs per-mode exact sum", w["scriptI"], 1e-6),
        _check("Q route A vs route B", w["AB"], 1e-8),
        _check("Q route B finite at x -> 0", fin, 1e9),
        _check("Q route B continuous across x = 0 (rel jump)", asym, 1e-5),
        _check("grouped cubic pair vs raw cubic terms", cub, 1e-8),
    ]
    return {"suite": "series", "checks": checks}


def suite_kernel_routes(params: WormParams, tol: float = 1e-10, seed: int = 0) -> dict:
    """brute, split and expansion routes agree; Hermitian symmetry and invariances."""
    from .kernel import decay_slope, kernel_strip
    quad = QuadratureSpec(tol=tol)
    rng = np.random.default_rng(seed)
    worst = 0.0
    herm = inv = 0.0
    c0 = params.c0
    for x in (0.0, 0.5 * c0, c0, 1.5 * c0, 2.0 * c0, 3.0 * c0):
        z = _random_strip_point(rng, params)
        w = _random_strip_point(rng, params)
        z = StripPoint(complex(complex(w.z1).real + x, complex(z.z1).imag), z.z2)
        kb = kernel_strip(z, w, params, "brute", quad)
        for r in ("split", "expansion"):
            worst = max(worst, _rel(kernel_strip(z, w, params, r, quad), kb))
        kw = kernel_strip(w, z, params, "brute", quad)
        herm = max(herm, _rel(kw.conjugate(), kb))
        zs = StripPoint(z.z1 + 0.7, z.z2 * cmath.exp(0.4j))
        ws = StripPoint(w.z1 + 0.7, w.z2 * cmath.exp(0.4j))
        inv = max(inv, _rel(kernel_strip(zs, ws, params, "brute", quad), kb))
    fit = decay_slope(params, sign=1)
    checks = [
        _check("route agreement (max rel diff)", worst, 1e-4),
        _check("Hermitian symmetry", herm, 1e-8),
        _check("translation/rotation invariance", inv, 1e-8),
        _check("far-field decay slope / -nu - 1", fit.slope / -params.nu - 1.0, 0.02, "abs_le",
               slope=fit.slope),
    ]
    return {"suite": "kernel-routes", "checks": checks}


def suite_lp(params: WormParams, tol: float = 1e-10, seed: int = 0) -> dict:
    """b-window consistency, Schur stability at p = 2, lower-bound slope."""
    from .lp_probe import (SchurConfig, choose_b, default_z_samples, lower_bound_slope,
                           printed_b_window, schur_check_Bi)
    p_min, p_max = lp_range(params)
    mismatches = 0
    for p in np.concatenate([np.linspace(1.05, 5.0, 23), [0.99 * p_min, 1.01 * p_min, 0.99 * p_max, 1.01 * p_max]]):
        try:
            choose_b(float(p), params)
            fired = False
        except NoValidB:
            fired = True
        lo, hi = printed_b_window(float(p), params)
        if fired != (not lo < hi):
            mismatches += 1
    cfg = SchurConfig(p=2.0, a=0.25)
    zs = default_z_samples(params)
    worst_change = 0.0
    finite = True
    for i in range(1, 9):
        r = schur_check_Bi(i, cfg, zs, params, strict=False)
        worst_change = max(worst_change, r.rel_change)
        finite = finite and math.isfinite(r.max_ratio)
    lb = lower_bound_slope(None, params)
    checks = [
        _check("NoValidB fires iff printed window empty (mismatches)", mismatches, 0.5),
        _check("Schur B_i refinement change at p = 2", worst_change, 0.1, finite=finite),
        _check("lower-bound slope - (nu - 1)", lb.slope - (params.nu - 1.0), 0.05, "abs_le", slope=lb.slope),
    ]
    return {"suite": "lp", "checks": checks}


def suite_scaling(params: WormParams, tol: float = 1e-10, seed: int = 0) -> dict:
    """Forelli-Rudin scaling exponents and the mode weight closed form."""
    from scipy.integrate import quad as squad
    from .lp_probe import forelli_rudin_scaling
    f1 = forelli_rudin_scaling("L31ii")
    f2 = forelli_rudin_scaling("L33ii", delta=0.5)
    hw = params.half_width
    worst = worst_abs = 0.0
    for j in range(-5, 6):
        for y in np.linspace(-params.beta + 0.05, params.beta - 0.05, 9):
            lo, hi = max(-hw, y - math.pi / 2), min(hw, y + math.pi / 2)
            num = squad(lambda t: math.exp((j + 1) * t), lo, hi, epsabs=0, epsrel=1e-13)[0] if hi > lo else 0.0
            err = abs(weight_lambda_j(float(y), j, params) - num)
            worst_abs = max(worst_abs, err)
            # absolute below magnitude 1, relative above (double resolution of e^{6 beta})
            worst = max(worst, err / max(1.0, abs(num)))
    checks = [
        _check("L31ii exponent + 1", f1.slope + 1.0, 0.05, "abs_le", slope=f1.slope),
        _check("L33ii exponent + delta (delta = 0.5)", f2.slope + 0.5, 0.05, "abs_le", slope=f2.slope),
        _check("weight lambda_j vs numeric convolution (abs, scaled by max(1, |value|))", worst, 1e-10,
               raw_abs=worst_abs),
    ]
    return {"suite": "scaling", "checks": checks}


_SUITE_FUNCS = {
    "decomposition": suite_decomposition,
    "series": suite_series,
    "kernel-routes": suite_kernel_routes,
    "lp": suite_lp,
    "scaling": suite_scaling,
}


def run_suite(name: str, beta: float, h, c0, tol: float, seed: int) -> dict:
    """Run one suite; exceptions become a failed check rather than aborting the run."""
    params = make_params(beta, h, c0)
    t0 = time.perf_counter()
    try:
        out = _SUITE_FUNCS[name](params, tol=tol, seed=seed)
    except WormkernError as exc:
        out = {"suite": name, "checks": [{"name": "exception", "error": type(exc).__name__,
                                           "message": str(exc), "passed": False}]}
    out["passed"] = all(c["passed"] for c in out["checks"])
    out["seconds"] = round(time.perf_counter() - t0, 1)
    return out
