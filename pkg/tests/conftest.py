import cmath
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from wormkern.geometry import StripPoint, make_params

BETAS = (1.5 * math.pi, 2.0 * math.pi, 3.0 * math.pi)


@pytest.fixture(scope="session")
def P32():
    return make_params(1.5 * math.pi)


@pytest.fixture(scope="session")
def P2():
    return make_params(2.0 * math.pi)


def strip_point(rng, params, margin=0.35, re=(-1.0, 1.0)):
    """Random point of D'_beta with slack at least ``margin`` in both defining inequalities."""
    hw = params.half_width
    L = rng.uniform(-hw + margin, hw - margin)
    y = L + rng.uniform(-math.pi / 2 + margin, math.pi / 2 - margin)
    return StripPoint(complex(rng.uniform(*re), y), math.exp(L / 2) * cmath.exp(1j * rng.uniform(0, 2 * math.pi)))


def tau_lambda(rng, params, re=(0.5, 4.0), margin=0.3, im=1.5):
    """Random interior point of the reduced domain with |Re tau| in ``re``."""
    while True:
        t = rng.choice([-1.0, 1.0]) * rng.uniform(*re) + 1j * rng.uniform(-im, im)
        ll = rng.uniform(-params.a / 2 + margin, params.a / 2 - margin)
        if abs(t.imag / 2 - ll) < math.pi / 2 - margin:
            return complex(t), math.exp(ll) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))


@st.composite
def strip_points(draw, params, margin=1e-3):
    hw = params.half_width
    L = draw(st.floats(-hw + margin, hw - margin))
    y = L + draw(st.floats(-math.pi / 2 + margin, math.pi / 2 - margin))
    x = draw(st.floats(-20, 20))
    th = draw(st.floats(-math.pi, math.pi))
    return StripPoint(complex(x, y), math.exp(L / 2) * cmath.exp(1j * th))


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_REPORT = []


@pytest.fixture
def report():
    """Record a one-line PASS/FAIL verdict; lines are echoed and repeated in the terminal summary."""
    def _report(criterion, ok, text):
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {text}"
        print(line)
        _REPORT.append(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
