import math

import numpy as np
import pytest

from conftest import rel
from wormkern.errors import PoleLineCollision
from wormkern.geometry import make_params
from wormkern.modes import compute_I_j
from wormkern.residues import (compute_J_j, decompose_modes, pole_spec, residue_R_j, residue_contour_oracle)

P = make_params(1.5 * math.pi)


@pytest.mark.parametrize("beta", [1.5 * math.pi, 2 * math.pi])
def test_residue_matches_contour_oracle(beta):
    p = make_params(beta)
    for j in range(-6, 7):
        for tau in (2 + 0.3j, -2 + 0.3j):
            assert rel(residue_R_j(tau, j, p), residue_contour_oracle(tau, j, p)) < 1e-8


def test_printed_variants_differ_from_oracle():
    tau = 2 + 0.3j
    orc = residue_contour_oracle(tau, 1, P)
    assert rel(residue_R_j(tau, 1, P, "lemma"), orc) > 0.1
    assert rel(residue_R_j(tau, 1, P, "proof"), orc) > 0.1
    # the lemma form is off by exactly a factor i s
    assert rel(1j * residue_R_j(tau, 1, P, "lemma"), residue_R_j(tau, 1, P)) < 1e-14


def test_resonant_residue_closed_form():
    nu = P.nu
    for tau in (1.3 + 0.2j, -0.7 - 0.4j):
        s = 1 if tau.real >= 0 else -1
        expect = 1j * s * nu ** 3 / math.pi * np.exp(-s * nu * tau) / np.sinh(1j * s * nu * math.pi)
        assert rel(residue_R_j(tau, -1, P), complex(expect)) < 1e-14


def test_residue_exponential_in_re_tau():
    a = residue_R_j(1.0 + 0.2j, 2, P)
    b = residue_R_j(3.5 + 0.2j, 2, P)
    assert abs(b) / abs(a) == pytest.approx(math.exp(-P.nu * 2.5), rel=1e-13)


def test_pole_spec_sign():
    assert pole_spec(1.0, 3, P).location == complex(2.0, P.nu)
    assert pole_spec(-1.0, 3, P).location == complex(2.0, -P.nu)
    assert pole_spec(0.0, 3, P).sign == 1


def test_zero_shift_gives_I():
    for tau in (0.8 + 0.2j, -1.5 - 0.5j):
        for j in (-2, 0, 3):
            I = compute_I_j(tau, j, P)
            J = compute_J_j(tau, j, P, h_override=0.0)
            assert abs(I.value - J.value) <= I.err_estimate + J.err_estimate + 1e-15


@pytest.mark.parametrize("h", [0.5, 1.0])
def test_pole_row_shift_rejected(h):
    with pytest.raises(PoleLineCollision):
        compute_J_j(1.0, 0, P, h_override=h)


def test_decomposition_identity():
    for tau in (0.5 + 0.9j, -5 - 1j, 2.2):
        rows = decompose_modes(tau, range(-8, 9), P)
        assert max(r.rel_defect for r in rows) < 1e-6
        # no loss of quality at the resonant mode j = -1
        res = [r for r in rows if r.j == -1][0]
        assert res.rel_defect < 1e-8


def test_decompose_empty_range():
    assert decompose_modes(1.0, [], P) == []


@pytest.mark.parametrize("beta", [1.5 * math.pi, 2 * math.pi])
def test_shifted_integral_decay(beta):
    # J_j is bounded by e^{-h|Re tau|}; its actual rate is that of the next pole row, min(1, 2 nu)
    p = make_params(beta)
    xs = np.linspace(5, 25, 9)
    for j in (0, 2):
        v = [abs(compute_J_j(complex(x, 0.3), j, p).value) for x in xs]
        slope = np.polyfit(xs, np.log(v), 1)[0]
        assert slope < -p.h
        assert slope == pytest.approx(-min(1.0, 2 * p.nu), rel=0.05)
