# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the integrand kernels in ``_fallback`` (same signatures, same formulas)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, sin, cos, fabs, M_PI

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double cabs(double complex)

from ._fallback import NODES as _NODES, W21 as _W21, W10 as _W10

cdef double[::1] NODES = np.ascontiguousarray(_NODES)
cdef double[::1] W21 = np.ascontiguousarray(_W21)
cdef double[::1] W10 = np.ascontiguousarray(_W10)
cdef double INV_2PI = 1.0 / (2.0 * M_PI)
cdef double TWO_OVER_PI = 2.0 / M_PI


cdef inline double complex c_expm1(double complex w) nogil:
    cdef double x = w.real, y = w.imag
    cdef double s
    if fabs(x) + fabs(y) > 0.5:
        # no cancellation to guard against away from 0
        return cexp(w) - 1.0
    s = sin(0.5 * y)
    return (expm1(x) * cos(y) - 2.0 * s * s) + 1j * (exp(x) * sin(y))


cdef inline double complex inv_expm1(double complex w) nogil:
    # 1/(e^w - 1) for Re w >= 0; below 1e-300 once Re w > 700
    if w.real > 700.0:
        return 0.0
    return 1.0 / c_expm1(w)


cdef inline double complex x_over_sinh_taylor(double complex cz, double c) nogil:
    cdef double complex u = cz * cz
    return (1.0 - u / 6.0 + 7.0 * u * u / 360.0 - 31.0 * u * u * u / 15120.0) / c


cdef inline double complex mode_point(double xi, double complex tau, double m, double a,
                                      double eta, double pole_eps) nogil:
    cdef double complex z = xi + 1j * eta
    cdef double complex w = z - m
    cdef double s1 = -1.0 if xi < 0 else 1.0
    cdef double s2 = -1.0 if xi - m < 0 else 1.0
    cdef double complex c1 = M_PI * z
    cdef double complex c2 = a * w
    cdef double complex expo = 1j * tau * z
    cdef double complex f1, f2
    if cabs(c1) < pole_eps:
        f1 = x_over_sinh_taylor(c1, M_PI)
    else:
        f1 = -2.0 * s1 * z / c_expm1(-2.0 * s1 * c1)
        expo = expo - s1 * c1
    if cabs(c2) < pole_eps:
        f2 = x_over_sinh_taylor(c2, a)
    else:
        f2 = -2.0 * s2 * w / c_expm1(-2.0 * s2 * c2)
        expo = expo - s2 * c2
    return INV_2PI * f1 * f2 * cexp(expo)


cdef inline double complex split_point(double xi, double complex tau, double m, double a,
                                       double eta, int k) nogil:
    cdef double s1 = -1.0 if xi < 0 else 1.0
    cdef double s2 = -1.0 if xi - m < 0 else 1.0
    cdef double complex zi = xi + 1j * eta
    cdef double complex expo = (1j * tau * xi - M_PI * fabs(xi) - a * fabs(xi - m)
                                - 1j * eta * (s1 * M_PI + s2 * a))
    cdef double complex v = TWO_OVER_PI * s1 * s2 * zi * (zi - m) * cexp(expo)
    if k == 1 or k == 3:
        v = v * inv_expm1(2.0 * s1 * M_PI * zi)
    if k == 2 or k == 3:
        v = v * inv_expm1(2.0 * s2 * a * (zi - m))
    return v


def mode_values(xi, double complex tau, double m, double a, double eta, double pole_eps):
    cdef cnp.ndarray[double, ndim=1] x = np.ascontiguousarray(np.ravel(np.asarray(xi, dtype=float)))
    cdef Py_ssize_t n = x.shape[0], i
    out = np.empty(n, dtype=complex)
    cdef double complex[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = mode_point(x[i], tau, m, a, eta, pole_eps)
    return out.reshape(np.shape(xi))


def split_values(xi, double complex tau, double m, double a, double eta, int k):
    cdef cnp.ndarray[double, ndim=1] x = np.ascontiguousarray(np.ravel(np.asarray(xi, dtype=float)))
    cdef Py_ssize_t n = x.shape[0], i
    out = np.empty(n, dtype=complex)
    cdef double complex[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = split_point(x[i], tau, m, a, eta, k)
    return out.reshape(np.shape(xi))


cdef tuple _run_panels(lo, hi, double complex tau, double m, double a, double eta,
                       double param, int k, bint split):
    cdef double[::1] L = np.ascontiguousarray(lo, dtype=float)
    cdef double[::1] H = np.ascontiguousarray(hi, dtype=float)
    cdef Py_ssize_t n = L.shape[0], i, q
    kron = np.empty(n, dtype=complex)
    err = np.empty(n, dtype=float)
    l1 = np.empty(n, dtype=float)
    cdef double complex[::1] kv = kron
    cdef double[::1] ev = err
    cdef double[::1] lv = l1
    cdef double mid, half, x
    cdef double complex f, sk, sg
    cdef double sl
    with nogil:
        for i in range(n):
            mid = 0.5 * (L[i] + H[i])
            half = 0.5 * (H[i] - L[i])
            sk = 0.0
            sg = 0.0
            sl = 0.0
            for q in range(21):
                x = mid + half * NODES[q]
                if split:
                    f = split_point(x, tau, m, a, eta, k)
                else:
                    f = mode_point(x, tau, m, a, eta, param)
                sk = sk + W21[q] * f
                sg = sg + W10[q] * f
                sl = sl + W21[q] * cabs(f)
            kv[i] = half * sk
            ev[i] = cabs(half * (sk - sg))
            lv[i] = half * sl
    return kron, err, l1


def mode_panels(lo, hi, double complex tau, double m, double a, double eta, double pole_eps):
    return _run_panels(lo, hi, tau, m, a, eta, pole_eps, 0, False)


def split_panels(lo, hi, double complex tau, double m, double a, double eta, int k):
    return _run_panels(lo, hi, tau, m, a, eta, 0.0, k, True)


cdef inline void _panel(double lo, double hi, double complex tau, double m, double a, double eta,
                        double param, int k, bint split, double complex* val, double* err,
                        double* l1) nogil:
    cdef double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo), x
    cdef double complex f, sk = 0.0, sg = 0.0
    cdef double sl = 0.0
    cdef int q
    for q in range(21):
        x = mid + half * NODES[q]
        if split:
            f = split_point(x, tau, m, a, eta, k)
        else:
            f = mode_point(x, tau, m, a, eta, param)
        sk = sk + W21[q] * f
        sg = sg + W10[q] * f
        sl = sl + W21[q] * cabs(f)
    val[0] = half * sk
    err[0] = cabs(half * (sk - sg))
    l1[0] = half * sl


cdef tuple _adaptive(lo, hi, double complex tau, double m, double a, double eta, double param,
                     int k, bint split, double tol, Py_ssize_t max_subdiv, double noise):
    cdef double[::1] L0 = np.ascontiguousarray(lo, dtype=float)
    cdef double[::1] H0 = np.ascontiguousarray(hi, dtype=float)
    cdef Py_ssize_t n = L0.shape[0], cap = max(max_subdiv, n), i, nb, nn
    lo_a = np.empty(cap, dtype=float)
    hi_a = np.empty(cap, dtype=float)
    val_a = np.empty(cap, dtype=complex)
    err_a = np.empty(cap, dtype=float)
    l1_a = np.empty(cap, dtype=float)
    cdef double[::1] L = lo_a
    cdef double[::1] H = hi_a
    cdef double complex[::1] V = val_a
    cdef double[::1] E = err_a
    cdef double[::1] A1 = l1_a
    cdef double complex total
    cdef double etot, l1tot, target, share, mid
    cdef int status = 0
    with nogil:
        for i in range(n):
            L[i] = L0[i]
            H[i] = H0[i]
            _panel(L[i], H[i], tau, m, a, eta, param, k, split, &V[i], &E[i], &A1[i])
        while True:
            total = 0.0
            etot = 0.0
            l1tot = 0.0
            for i in range(n):
                total = total + V[i]
                etot = etot + E[i]
                l1tot = l1tot + A1[i]
            target = max(tol * cabs(total), noise * l1tot)
            if not (etot == etot) or etot > 1e308:
                status = 2
                break
            if etot <= target:
                break
            share = 0.5 * target / n
            nb = 0
            for i in range(n):
                if E[i] > share:
                    nb = nb + 1
            if n + nb > cap:
                status = 1
                break
            nn = n
            for i in range(nn):
                if E[i] > share:
                    mid = 0.5 * (L[i] + H[i])
                    L[n] = mid
                    H[n] = H[i]
                    H[i] = mid
                    _panel(L[i], H[i], tau, m, a, eta, param, k, split, &V[i], &E[i], &A1[i])
                    _panel(L[n], H[n], tau, m, a, eta, param, k, split, &V[n], &E[n], &A1[n])
                    n = n + 1
    return complex(total), max(etot, noise * l1tot), l1tot, n, status, target


def integrate_mode(lo, hi, double complex tau, double m, double a, double eta, double pole_eps,
                   double tol, Py_ssize_t max_subdiv, double noise):
    """Adaptive G10/K21 integral of the mode integrand; returns (value, err, l1, n, status, target)."""
    return _adaptive(lo, hi, tau, m, a, eta, pole_eps, 0, False, tol, max_subdiv, noise)


def integrate_split(lo, hi, double complex tau, double m, double a, double eta, int k,
                    double tol, Py_ssize_t max_subdiv, double noise):
    """Adaptive G10/K21 integral of the split integrand; same return layout as integrate_mode."""
    return _adaptive(lo, hi, tau, m, a, eta, 0.0, k, True, tol, max_subdiv, noise)
