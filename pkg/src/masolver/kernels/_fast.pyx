# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-mode solver kernels.

Semantics must match ``_fallback.py`` exactly; see that module for the
branch conventions.  Only flat float64 arrays are accepted.
"""

from libc.math cimport fabs

BACKEND = "cython"

cdef double NEAR_CANCEL_REL = 1e-8


def mas_combine(double[::1] zm, double[::1] zy, double[::1] s,
                double eta1, double eta2, double tol, double[::1] out):
    cdef Py_ssize_t d = zm.shape[0]
    cdef Py_ssize_t r = s.shape[0]
    cdef Py_ssize_t i
    cdef Py_ssize_t bad = -1
    cdef Py_ssize_t warn = -1
    cdef bint etas_zero = (eta1 == 0.0) and (eta2 == 0.0)
    cdef double si, s2, denom, total
    for i in range(d):
        if i < r and s[i] > tol:
            si = s[i]
            s2 = si * si
            denom = eta1 * s2 + eta2
            total = denom + s2
            if total <= 0.0:
                bad = i
                break
            if warn < 0 and not etas_zero and fabs(denom) < NEAR_CANCEL_REL * s2:
                warn = i
            out[i] = (denom * zm[i] + si * zy[i]) / total
        else:
            out[i] = zm[i]
    return bad, warn


def budget_modes(double[::1] s, Py_ssize_t d, double eta1, double eta2,
                 double a_t, double c_t, double sigma_y, double tol,
                 double[::1] lambdas, double[::1] gammas):
    cdef Py_ssize_t r = s.shape[0]
    cdef Py_ssize_t i
    cdef double si, s2, denom, thresh
    cdef double c2 = c_t * c_t
    for i in range(d):
        if i < r and s[i] > tol:
            si = s[i]
            s2 = si * si
            denom = (eta1 + 1.0) * s2 + eta2
            if denom <= 0.0:
                return i
            thresh = a_t * sigma_y * si / denom
            if c_t >= thresh:
                lambdas[i] = 1.0
                gammas[i] = c2 - thresh * thresh
            else:
                lambdas[i] = c_t / thresh
                gammas[i] = 0.0
        else:
            lambdas[i] = 1.0
            gammas[i] = c2
    return -1


def budget_combine(double[::1] zm, double[::1] zy, double[::1] s,
                   double eta1, double eta2, double tol,
                   double[::1] lambdas, double[::1] out):
    cdef Py_ssize_t d = zm.shape[0]
    cdef Py_ssize_t r = s.shape[0]
    cdef Py_ssize_t i
    cdef double si, s2, total
    for i in range(d):
        if i < r and s[i] > tol:
            si = s[i]
            s2 = si * si
            total = (eta1 + 1.0) * s2 + eta2
            if total <= 0.0:
                return i
            out[i] = zm[i] + lambdas[i] * (si * zy[i] - s2 * zm[i]) / total
        else:
            out[i] = zm[i]
    return -1
