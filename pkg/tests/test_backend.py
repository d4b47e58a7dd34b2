import math
import os
import subprocess
import sys

import numpy as np
import pytest

from wormkern import backend

A = 2 * 1.5 * math.pi - math.pi
try:
    CY = backend.implementation("cython")
except ImportError:
    CY = None
NP = backend.implementation("numpy")

needs_cython = pytest.mark.skipif(CY is None, reason="compiled extension not built")


def test_backend_name():
    assert backend.backend() in ("cython", "numpy")
    with pytest.raises(ValueError):
        backend.implementation("fortran")


@needs_cython
@pytest.mark.parametrize("j", [-5, -1, 0, 1, 3, 8])
@pytest.mark.parametrize("eta", [0.0, 0.7])
def test_mode_values_agree(j, eta):
    xi = np.concatenate([np.linspace(-30, 30, 401), [0.0, (j + 1) / 2, 1e-9, -1e-9]])
    tau = 1.3 - 0.4j
    a = CY.mode_values(xi, tau, (j + 1) / 2, A, eta, 1e-3)
    b = NP.mode_values(xi, tau, (j + 1) / 2, A, eta, 1e-3)
    scale = np.max(np.abs(b))
    assert np.max(np.abs(np.asarray(a) - b)) <= 1e-13 * scale


@needs_cython
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_split_values_agree(k):
    xi = np.linspace(-25, 25, 301) + 1e-3
    a = CY.split_values(xi, -2.1 + 0.3j, 1.0, A, 0.75, k)
    b = NP.split_values(xi, -2.1 + 0.3j, 1.0, A, 0.75, k)
    assert np.max(np.abs(np.asarray(a) - b)) <= 1e-13 * np.max(np.abs(b))


@needs_cython
def test_adaptive_integrals_agree():
    edges = np.linspace(-40.0, 40.0, 17)
    lo, hi = edges[:-1], edges[1:]
    for j in (-3, 0, 4):
        m = (j + 1) / 2
        a = CY.integrate_mode(lo, hi, 0.8 + 0.2j, m, A, 0.0, 1e-3, 1e-12, 400, 1e-15)
        b = NP.integrate_mode(lo, hi, 0.8 + 0.2j, m, A, 0.0, 1e-3, 1e-12, 400, 1e-15)
        assert abs(a[0] - b[0]) <= 1e-12 * abs(b[0])
        for k in (0, 3):
            a = CY.integrate_split(lo, hi, 0.8 + 0.2j, m, A, 0.75, k, 1e-12, 400, 1e-15)
            b = NP.integrate_split(lo, hi, 0.8 + 0.2j, m, A, 0.75, k, 1e-12, 400, 1e-15)
            assert abs(a[0] - b[0]) <= 1e-12 * max(abs(b[0]), 1e-300)


def test_pure_env_forces_numpy():
    env = dict(os.environ, WORMKERN_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from wormkern import backend; print(backend.backend())"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == "numpy"
