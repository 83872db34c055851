# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for odd-harmonic series

    S(x, s) = sum_{m < nterms} (2m+1)^power * trig((2m+1) x) * exp(-(2m+1)^2 s)

with trig = sin or cos.  Harmonics are advanced by a rotation and the decay
factor by a geometric recurrence, both re-anchored every 64 terms; the sum
is compensated.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, fabs, pow

cnp.import_array()

cdef double TOL = 1e-17


def sine_series(x, s, long nterms, int power=-1, bint use_cos=False):
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] sa = np.ascontiguousarray(
        np.broadcast_to(s, np.shape(x)), dtype=np.float64).ravel()
    cdef Py_ssize_t n = xa.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef Py_ssize_t i
    cdef long m
    cdef double xi, si, c1, s1, c2, s2, cm, sm, tmp, q, r, e, k, term, total, comp, y, t, bound
    with nogil:
        for i in range(n):
            xi = xa[i]
            si = sa[i]
            c2 = cos(2.0 * xi)
            s2 = sin(2.0 * xi)
            cm = 0.0
            sm = 0.0
            e = exp(-si)
            q = exp(-8.0 * si)
            r = q
            total = 0.0
            comp = 0.0
            for m in range(nterms):
                k = 2.0 * m + 1.0
                if m % 64 == 0:
                    # re-anchor both recurrences so rounding does not accumulate
                    cm = cos(k * xi)
                    sm = sin(k * xi)
                    e = exp(-k * k * si)
                    r = exp(-8.0 * (m + 1) * si)
                if power == -1:
                    bound = e / k
                elif power == 0:
                    bound = e
                elif power == 1:
                    bound = e * k
                else:
                    bound = pow(k, power) * e
                if use_cos:
                    term = bound * cm
                else:
                    term = bound * sm
                # Kahan summation
                y = term - comp
                t = total + y
                comp = (t - total) - y
                total = t
                if si > 0.0 and k * k * si > power and (bound == 0.0 or bound < TOL * fabs(total)):
                    break
                tmp = cm * c2 - sm * s2
                sm = sm * c2 + cm * s2
                cm = tmp
                e = e * r
                r = r * q
            out[i] = total
    return out.reshape(np.shape(x))
