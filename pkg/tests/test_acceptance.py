"""One test per acceptance criterion; tolerances are pinned, measured values are reported."""
import math
import time

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from conftest import rel, strip_point, tau_lambda
from wormkern import lp_probe as lp
from wormkern.errors import NoValidB
from wormkern.geometry import StripPoint, lp_range, make_params
from wormkern.kernel import decay_slope, kernel_strip
from wormkern.modes import mode_ratios, mode_series, weight_lambda_j
from wormkern.residues import decompose_modes, residue_R_j, residue_contour_oracle
from wormkern.series import (F1, F2, Q_delta, RSParams, script_I_integrand, sum_R_closed, sum_R_direct,
                             sum_script_I_closed)

P32 = make_params(1.5 * math.pi)
P2 = make_params(2 * math.pi)
BETAS = (1.5 * math.pi, 2 * math.pi, 3 * math.pi)
TAU_GRID = [complex(s * x, y) for x in (0.5, 1.5, 3.0, 5.0) for s in (1, -1) for y in (-1.0, 0.0, 1.0)]
J_RANGE = range(-8, 9)


def test_criterion_01_decomposition_identity(report):
    t0 = time.perf_counter()
    worst = 0.0
    for beta in BETAS:
        params = make_params(beta)
        for tau in TAU_GRID:
            for row in decompose_modes(tau, J_RANGE, params):
                worst = max(worst, row.rel_defect)
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt <= 120
    report(1, ok, f"max rel defect |I_j - R_j - J_j| / |I_j| = {worst:.3g} (tol 1e-6), {dt:.1f}s (limit 120s)")
    assert ok


def test_criterion_02_residue_oracle(report):
    t0 = time.perf_counter()
    worst = lemma = proof = 0.0
    for beta in BETAS:
        params = make_params(beta)
        for tau in TAU_GRID:
            for j in J_RANGE:
                orc = residue_contour_oracle(tau, j, params)
                worst = max(worst, rel(residue_R_j(tau, j, params), orc))
                lemma = max(lemma, rel(residue_R_j(tau, j, params, "lemma"), orc))
                proof = max(proof, rel(residue_R_j(tau, j, params, "proof"), orc))
    dt = time.perf_counter() - t0
    # the two printed residue forms disagree with each other and the contour value selects one convention
    resolved = worst < 1e-8 and max(lemma, proof) > 1e-3
    ok = resolved and dt <= 60
    report(2, ok, f"rel err vs contour oracle = {worst:.3g} (tol 1e-8); printed variants off by "
                  f"{lemma:.3g} (lemma form) and {proof:.3g} (proof form); {dt:.1f}s (limit 60s)")
    assert ok


def test_criterion_03_residue_sum_closed_form(report):
    rng = np.random.default_rng(3)
    worst = worst_d = 0.0
    for _ in range(20):
        t, l = tau_lambda(rng, P32)
        main, err = sum_R_closed(t, l, P32)
        worst = max(worst, rel(main + err, sum_R_direct(t, l, P32)))
        hh = 1e-5
        dF = (F1(t + hh, l, P32) - F1(t - hh, l, P32)) / (2 * hh) / 1j
        worst_d = max(worst_d, rel(dF, F2(t, l, P32)))
    ok = worst < 1e-8 and worst_d < 1e-6
    report(3, ok, f"closed vs direct residue sum rel = {worst:.3g} (tol 1e-8); F2 vs dF1/dtau rel = {worst_d:.3g} (tol 1e-6)")
    assert ok


def _script_I_oracle(t, l, rs):
    def mode(j):
        m = 0.5 * (j + 1)
        edges = sorted({-40.0, 0.0, m, 40.0 + m})
        out = 0j
        for lo, hi in zip(edges[:-1], edges[1:]):
            re = quad(lambda x: script_I_integrand(x, t, j, rs).real, lo, hi, epsabs=0, epsrel=1e-12, limit=400)[0]
            im = quad(lambda x: script_I_integrand(x, t, j, rs).imag, lo, hi, epsabs=0, epsrel=1e-12, limit=400)[0]
            out += re + 1j * im
        return out * l ** j
    rp, rm = mode_ratios(t, l, P32)
    return mode_series(mode, rp, rm, 1e-9)[0]


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_criterion_04_shifted_line_closed_forms(report):
    rng = np.random.default_rng(4)
    rs = RSParams.worm(P32, h=0.75)
    worst = 0.0
    for _ in range(20):
        t, l = tau_lambda(rng, P32, re=(0.5, 3))
        worst = max(worst, rel(sum_script_I_closed(t, l, rs), _script_I_oracle(t, l, rs)))
    worst_ab = 0.0
    n = 0
    while n < 50:
        x = rng.uniform(0.1, 3) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        args = (math.exp(rng.uniform(-2, 2)), math.exp(rng.uniform(-3, 3)) * np.exp(1j * rng.uniform(0, 6.3)),
                rng.uniform(0, 0.3), rng.uniform(-1, 1), int(rng.choice([-1, 1])))
        try:
            a, b = Q_delta(x, *args, route="A"), Q_delta(x, *args, route="B")
        except ZeroDivisionError:
            continue
        worst_ab = max(worst_ab, rel(a, b))
        n += 1
    big = asym = 0.0
    args = (math.exp(P32.a / 2), 0.9 * np.exp(0.4j), 0.05, 0.7, 1)
    for x in (1e-6, 1e-7, 1e-8, 1e-9):
        qp, qm = Q_delta(x, *args), Q_delta(-x, *args)
        big = max(big, abs(qp), abs(qm))
        asym = max(asym, rel(qp, qm))
    ok = worst < 1e-6 and worst_ab < 1e-8 and big < 1e9 and asym < 1e-5
    report(4, ok, f"closed vs quadrature-summation rel = {worst:.3g} (tol 1e-6); route A vs B rel = {worst_ab:.3g} "
                  f"(tol 1e-8); near removable point max |Q| = {big:.3g} (< 1e9), +-x rel jump = {asym:.3g}")
    assert ok


def test_criterion_05_kernel_routes(report):
    t0 = time.perf_counter()
    worst = 0.0
    for params, seed in ((P32, 5), (P2, 6)):
        rng = np.random.default_rng(seed)
        for x in np.linspace(0.0, 3 * params.c0, 15):
            z, w = strip_point(rng, params), strip_point(rng, params)
            sgn = rng.choice([-1, 1])
            z = StripPoint(complex(complex(w.z1).real + sgn * x, complex(z.z1).imag), z.z2)
            kb = kernel_strip(z, w, params, "brute")
            for r in ("split", "expansion"):
                worst = max(worst, rel(kernel_strip(z, w, params, r), kb))
    rng = np.random.default_rng(7)
    sym = 0.0
    for _ in range(10):
        z, w = strip_point(rng, P32, re=(0.5, 3)), strip_point(rng, P32, re=(-3, -0.5))
        k = kernel_strip(z, w, P32)
        sym = max(sym, rel(kernel_strip(w, z, P32).conjugate(), k))
        s, th = rng.uniform(-4, 4), rng.uniform(0, 2 * math.pi)
        rot = np.exp(1j * th)
        sym = max(sym, rel(kernel_strip(StripPoint(z.z1 + s, z.z2 * rot), StripPoint(w.z1 + s, w.z2 * rot), P32), k))
    dt = time.perf_counter() - t0
    ok = worst < 1e-4 and sym < 1e-8 and dt <= 300
    report(5, ok, f"route agreement rel = {worst:.3g} (tol 1e-4) on 30 points over |Re tau| in [0, 3 c0]; "
                  f"symmetry/invariance rel = {sym:.3g} (tol 1e-8); {dt:.1f}s (limit 300s)")
    assert ok


def test_criterion_06_far_field_decay(report):
    parts = []
    ok = True
    for params, name in ((P32, "3pi/2"), (P2, "2pi")):
        for sign in (1, -1):
            fit = decay_slope(params, (10.0, 50.0), sign)
            err = abs(fit.slope / -params.nu - 1)
            ok = ok and err <= 0.02
            parts.append(f"beta={name} sign={sign:+d}: {fit.slope:.5f} vs {-params.nu:.5f} ({100 * err:.2f}%)")
    report(6, ok, "; ".join(parts) + " (tol 2%)")
    assert ok


def test_criterion_07_sharp_range_witnesses(report):
    parts = []
    ok = True
    for params, name in ((P32, "3pi/2"), (P2, "2pi")):
        fit = lp.lower_bound_slope(None, params)
        good = abs(fit.slope - (params.nu - 1)) <= 0.05
        ok = ok and good
        parts.append(f"slope beta={name} {fit.slope:.4f} vs {params.nu - 1:.4f}")
    p_min, p_max = lp_range(P32)
    verdicts = {}
    for p in (1.2, 2.0, 4.5):
        q = p if p <= p_max else lp.conjugate_exponent(p)
        r = lp.divergence_probe(q, None, P32)
        verdicts[p] = r
        parts.append(f"p={p}: {r.verdict} (rate {r.fitted_exponent:.3f}, expected {r.expected_exponent:.3f})")
    ok = ok and verdicts[1.2].verdict == "divergent" and verdicts[4.5].verdict == "divergent"
    ok = ok and verdicts[2.0].verdict == "convergent"
    ok = ok and all(np.all(np.diff(verdicts[p].cumulative) > 0) for p in (1.2, 4.5))
    mismatches = 0
    for params in (P32, P2):
        lo_p, hi_p = lp_range(params)
        for p in list(np.linspace(1.05, 6.0, 45)) + [0.99 * lo_p, 1.01 * lo_p, 0.99 * hi_p, 1.01 * hi_p]:
            lo, hi = lp.printed_b_window(p, params)
            try:
                lp.choose_b(p, params)
                fired = False
            except NoValidB:
                fired = True
            mismatches += fired != (not lo < hi)
    ok = ok and mismatches == 0
    parts.append(f"NoValidB vs printed-window emptiness mismatches = {mismatches}")
    report(7, ok, "; ".join(parts))
    assert ok


def test_criterion_08_schur_suite(report):
    t0 = time.perf_counter()
    worst_ratio = worst_change = 0.0
    finite = True
    zs = lp.default_z_samples(P32)
    for p in (1.5, 2.0, 3.0):
        cfg = lp.SchurConfig(p=p, a=lp.default_a(p))
        for i in lp.MAJORANTS:
            r = lp.schur_check_Bi(i, cfg, zs, P32, strict=True)
            finite = finite and math.isfinite(r.max_ratio) and math.isfinite(r.refined_max_ratio)
            worst_ratio = max(worst_ratio, r.max_ratio)
            worst_change = max(worst_change, r.rel_change)
    dt = time.perf_counter() - t0
    ok = finite and worst_change < 0.1 and dt <= 600
    report(8, ok, f"B1..B8 for p in {{1.5, 2, 3}}: max ratio {worst_ratio:.4g}, max refinement change "
                  f"{worst_change:.3g} (tol 0.1), {dt:.1f}s (limit 600s)")
    assert ok


def test_criterion_09_scaling_laws(report):
    f = lp.forelli_rudin_scaling("L31ii")
    ok = abs(f.slope + 1) <= 0.05
    parts = [f"L31ii {f.slope:.4f} vs -1"]
    for d in (0.25, 0.5, 1.0):
        g = lp.forelli_rudin_scaling("L33ii", delta=d)
        ok = ok and abs(g.slope + d) <= 0.05
        parts.append(f"L33ii(delta={d}) {g.slope:.4f} vs {-d}")
    report(9, ok, "; ".join(parts) + " (tol 0.05)")
    assert ok


def _weight_oracle(y, j, params):
    """Numeric convolution of the two indicators against e^{(j+1)t}, in 40-digit arithmetic."""
    hw = params.half_width
    with mp.workdps(40):
        f = lambda t: mp.e ** ((j + 1) * t) if (abs(t) <= hw and abs(y - t) <= math.pi / 2) else mp.mpf(0)
        pts = sorted({-hw - 1, -hw, hw, y - math.pi / 2, y + math.pi / 2, hw + 1})
        return mp.quad(f, pts)


def _weight_errors():
    out = []
    for params in (P32, P2):
        for j in range(-5, 6):
            for y in np.linspace(-params.beta, params.beta, 43)[1:-1]:
                ref = _weight_oracle(float(y), j, params)
                got = weight_lambda_j(float(y), j, params)
                out.append((float(abs(mp.mpf(got) - ref)), float(abs(ref))))
    return np.array(out)


def test_criterion_10_weight_closed_form(report):
    errs = _weight_errors()
    raw = errs[:, 0].max()
    scaled = (errs[:, 0] / np.maximum(1.0, errs[:, 1])).max()
    ok = scaled <= 1e-10
    report(10, ok, f"max |error| / max(1, |lambda_j|) = {scaled:.3g} (tol 1e-10); raw max |error| = {raw:.3g} "
                   f"at |lambda_j| up to {errs[:, 1].max():.3g}")
    assert ok


@pytest.mark.xfail(strict=True, reason="an absolute 1e-10 is below double resolution once lambda_j exceeds ~1e6")
def test_criterion_10_literal_absolute():
    errs = _weight_errors()
    assert errs[:, 0].max() <= 1e-10


def test_criterion_11_condition_r_surrogate(report):
    parts = []
    ok = True
    for params, name in ((P32, "3pi/2"), (P2, "2pi")):
        r = lp.condition_r_surrogate(None, params)
        good = r.monotone and not r.plateau and r.eps.min() <= 1e-6
        ok = ok and good
        parts.append(f"beta={name}: integrals " + ", ".join(f"{v:.3g}" for v in r.integral)
                     + f" at eps {r.eps.max():.0e}..{r.eps.min():.0e}, monotone={r.monotone}, plateau={r.plateau}")
    report(11, ok, "; ".join(parts))
    assert ok
