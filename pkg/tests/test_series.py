import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from conftest import rel, tau_lambda
from wormkern.errors import AnnulusViolation, DenominatorVanishes, DomainViolation
from wormkern.geometry import make_params, sgn
from wormkern.modes import mode_ratios, mode_series
from wormkern.residues import compute_J_j
from wormkern.series import (E_SWITCH, F1, F2, G_SWITCH, F_direct, G_funcs, Q_delta, RSParams, cubic_pair_neg,
                             cubic_pair_pos, lemma_outer_neg, lemma_outer_pos, psi3m, psi3p, script_I_integrand,
                             script_I_pieces, split_mode, sum_E_k, sum_M_closed, sum_R_closed, sum_R_direct,
                             sum_script_I_closed, sum_script_I_raw, E_func)

P = make_params(1.5 * math.pi)


# E and G --------------------------------------------------------------------

def test_E_examples():
    assert E_func(0) == -1
    assert E_func(2) == pytest.approx(1 - math.e, rel=1e-15)
    assert abs(E_func(E_SWITCH * (1 + 1e-12)) - E_func(E_SWITCH * (1 - 1e-12))) < 1e-14


@settings(max_examples=200)
@given(st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False))
def test_E_against_mpmath(x):
    with mp.workdps(30):
        y = mp.mpc(x) / 2
        ref = complex(-1 if y == 0 else -mp.expm1(y) / y)
    assert rel(E_func(x), ref) < 1e-13


@pytest.mark.parametrize("sign", [1, -1])
def test_G6_limit_and_delta_zero(sign):
    G = G_funcs(0, 0.3, 0.7, sign)
    assert G[5] == pytest.approx(-sign * 0.3, abs=1e-13)
    for x in (0, 0.1, 1.3 - 0.4j):
        G = G_funcs(x, 0.0, 0.7, sign)
        assert abs(G[4]) < 1e-13 and abs(G[5]) < 1e-13


def test_G_finite_and_continuous_near_zero():
    for sign in (1, -1):
        for x in np.concatenate([np.linspace(-0.3, 0.3, 61), 1j * np.linspace(-0.3, 0.3, 61)]):
            assert all(np.isfinite(g) for g in G_funcs(x, 0.2, 0.6, sign))
        # circle-mean branch and direct branch agree across the switch
        a = G_funcs(G_SWITCH * 0.999, 0.2, 0.6, sign)
        b = G_funcs(G_SWITCH * 1.001, 0.2, 0.6, sign)
        for ga, gb in zip(a, b):
            assert abs(ga - gb) < 1e-3 * max(1.0, abs(gb))


# Q routes --------------------------------------------------------------------

def test_Q_routes_agree(rng):
    worst = 0.0
    for _ in range(50):
        x = rng.uniform(0.1, 3) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        alpha = math.exp(rng.uniform(-2, 2))
        lam = math.exp(rng.uniform(-3, 3)) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        delta = rng.uniform(0, 0.3)
        h = rng.uniform(-1, 1)
        s = int(rng.choice([-1, 1]))
        try:
            a = Q_delta(x, alpha, lam, delta, h, s, "A")
            b = Q_delta(x, alpha, lam, delta, h, s, "B")
        except DenominatorVanishes:
            continue
        worst = max(worst, rel(a, b))
    assert worst < 1e-8


def test_Q_route_B_entire_at_zero():
    args = (math.exp(1.0), 0.8 * cmath.exp(0.5j), 0.1, 0.6, 1)
    b_plus, b_minus = Q_delta(1e-8, *args), Q_delta(-1e-8, *args)
    # only the O(|dQ/dx| * 2e-8) Lipschitz gap remains
    assert abs(b_plus - b_minus) < 1e-7
    a_plus = Q_delta(1e-8, *args, route="A")
    assert rel(a_plus, b_plus) > 1e-6          # the difference quotient has cancelled


def test_Q_denominator_guard():
    with pytest.raises(DenominatorVanishes):
        Q_delta(0.5, 2.0, 2.0, 0.0, 0.5, 1)


# residue sums ---------------------------------------------------------------

@pytest.mark.parametrize("beta", [1.5 * math.pi, 2 * math.pi])
def test_residue_sum_closed_vs_direct(beta, rng):
    p = make_params(beta)
    for _ in range(20):
        t, l = tau_lambda(rng, p, re=(p.c0, 5))
        main, err = sum_R_closed(t, l, p)
        assert rel(main + err, sum_R_direct(t, l, p)) < 1e-8


def test_residue_sum_prefactor():
    # shifting Re tau by a multiple of 4 pi leaves the phi factors unchanged
    l = 0.9 * cmath.exp(0.3j)
    a, _ = sum_R_closed(1.0 + 0.2j, l, P)
    b, _ = sum_R_closed(1.0 + 4 * math.pi + 0.2j, l, P)
    assert rel(b / a, math.exp(-P.nu * 4 * math.pi)) < 1e-12


def test_residue_sum_domain():
    with pytest.raises(DomainViolation):
        sum_R_closed(1.0, math.exp(P.half_width + 0.1), P)


def test_F_closed_forms(rng):
    for _ in range(20):
        t, l = tau_lambda(rng, P)
        assert rel(F1(t, l, P), F_direct(t, l, P, 1)) < 1e-10
        assert rel(F2(t, l, P), F_direct(t, l, P, 2)) < 1e-10
        hh = 1e-5
        dF = (F1(t + hh, l, P) - F1(t - hh, l, P)) / (2 * hh) / 1j
        assert rel(dF, F2(t, l, P)) < 1e-6


def test_F1_simple_pole_rate():
    t = 0.7 + 0.2j
    q = cmath.exp((1j * t - math.pi) / 2)
    gaps = np.geomspace(1e-2, 1e-5, 7)
    vals = [abs(F1(t, (1 - g) / q, P)) for g in gaps]
    slope = np.polyfit(np.log(gaps), np.log(vals), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)


def test_F_annulus_guard():
    with pytest.raises(AnnulusViolation):
        F1(0.5, math.exp(math.pi), P)


# shifted-line closed forms ---------------------------------------------------

def _script_I_quad(t, j, rs):
    m = 0.5 * (j + 1)
    edges = sorted({-40.0, 0.0, m, 40.0 + m})
    out = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        for part in (0, 1):
            f = (lambda x: script_I_integrand(x, t, j, rs).real) if part == 0 else \
                (lambda x: script_I_integrand(x, t, j, rs).imag)
            out += (1j if part else 1) * quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=400)[0]
    return out


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_script_I_closed_vs_quadrature(rng):
    rs = RSParams.worm(P, h=0.75)
    for _ in range(4):
        t, l = tau_lambda(rng, P, re=(0.5, 3))
        rp, rm = mode_ratios(t, l, P)
        direct = mode_series(lambda j: _script_I_quad(t, j, rs) * l ** j, rp, rm, 1e-9)[0]
        assert rel(sum_script_I_closed(t, l, rs), direct) < 1e-6


def test_one_sided_sums_match_pieces(rng):
    for h, d in ((0.7, 0.0), (-0.6, 0.05), (0.55, 0.1)):
        rs = RSParams(P.a, math.pi, d, h)
        for _ in range(5):
            t, l = tau_lambda(rng, P)
            pos = sum((script_I_pieces(t, j, rs)[0] + script_I_pieces(t, j, rs)[2]) * l ** j for j in range(0, 200))
            neg = sum((script_I_pieces(t, j, rs)[0] + script_I_pieces(t, j, rs)[2]) * l ** j for j in range(-200, 0))
            mid_p = sum(script_I_pieces(t, j, rs)[1] * l ** j for j in range(0, 200))
            mid_n = sum(script_I_pieces(t, j, rs)[1] * l ** j for j in range(-200, 0))
            assert rel(lemma_outer_pos(t, l, rs), pos) < 1e-8
            assert rel(lemma_outer_neg(t, l, rs), neg) < 1e-8
            assert rel(psi3p(t, l, rs), -mid_p) < 1e-8
            assert rel(psi3m(t, l, rs), -mid_n) < 1e-8
            assert rel(sum_script_I_raw(t, l, rs), sum_script_I_closed(t, l, rs)) < 1e-10


def test_cubic_pair_identities(rng):
    for _ in range(50):
        rs = RSParams(P.a, math.pi, 0.0, rng.uniform(-1, 1))
        t, l = tau_lambda(rng, P)
        for f in (cubic_pair_pos, cubic_pair_neg):
            raw, grouped = f(t, l, rs)
            assert rel(raw, grouped) < 1e-10


def test_M_closed_vs_mode_quadrature(rng):
    for _ in range(3):
        t, l = tau_lambda(rng, P, re=(0.5, 3))
        rp, rm = mode_ratios(t, l, P)
        direct = mode_series(lambda j: split_mode(t, j, 0, P)[0] * l ** j, rp, rm, 1e-10)[0]
        assert rel(sum_M_closed(t, l, P), direct) < 1e-6


def test_shifted_total_is_shift_independent():
    t, l = 1.7 - 0.4j, 0.8 * cmath.exp(1.1j)
    tot = [sum_M_closed(t, l, P, h=h) + sum(sum_E_k(t, l, k, P, h=h) for k in (1, 2, 3)) for h in (0.75, 0.62)]
    assert rel(tot[0], tot[1]) < 1e-6


def test_J_equals_M_plus_E():
    for t, l in ((1.3 + 0.4j, 0.8 * cmath.exp(0.7j)), (-2.5 - 0.6j, 1.9 * cmath.exp(2j))):
        rp, rm = mode_ratios(t, l, P)
        J = mode_series(lambda j: compute_J_j(t, j, P).value * l ** j, rp, rm, 1e-10)[0]
        c = sum_M_closed(t, l, P) + sum(sum_E_k(t, l, k, P) for k in (1, 2, 3))
        assert rel(c, J) < 1e-6


def test_E_sums_bounded_in_far_field():
    hw = P.half_width
    for l in (0.7 * cmath.exp(0.4j), 2.0 * cmath.exp(2j)):
        vals = {}
        for x in (5, 10, 20, 35, 50):
            t = complex(x, 0.3)
            w = cmath.exp(sgn(x) * P.h * t) * (l - math.exp(-hw)) ** 2 * (math.exp(hw) - l) ** 2
            vals[x] = max(abs(w * sum_E_k(t, l, k, P)) for k in (1, 2, 3))
        near = max(vals[x] for x in (5, 10, 20))
        assert max(vals[35], vals[50]) < 5 * near


@pytest.mark.xfail(strict=True, reason="E sums are not small next to M: the ratio reaches about 0.9 at interior points")
def test_E_small_relative_to_M(rng):
    worst = 0.0
    for _ in range(12):
        t, l = tau_lambda(rng, P, re=(1, 4))
        m = abs(sum_M_closed(t, l, P))
        e = abs(sum(sum_E_k(t, l, k, P) for k in (1, 2, 3)))
        worst = max(worst, e / m)
    assert worst < 0.2


@pytest.mark.parametrize("beta", [1.5 * math.pi, 2 * math.pi])
def test_M_sum_decays_at_shift_rate(beta):
    # |M| ~ e^{-h|x|} |x|^k; fit the exponential rate with a free power-law factor on 4 pi-aligned samples
    params = make_params(beta)
    xs = 20 + 4 * math.pi * np.arange(11)
    for s in (1, -1):
        for l in (0.8 * cmath.exp(0.5j), 1.3 * cmath.exp(2j)):
            m = np.array([abs(sum_M_closed(complex(s * x, 0.2), l, params)) for x in xs])
            A = np.vstack([xs, np.log(xs), np.ones_like(xs)]).T
            rate = np.linalg.lstsq(A, np.log(m), rcond=None)[0][0]
            assert rate == pytest.approx(-params.h, rel=0.02)
