# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled beam-splitter expansion kernel.

Mirrors ``zwmsim._kernels_py.bs_expand`` term for term.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline double complex _cpow(double complex z, Py_ssize_t k) noexcept nogil:
    cdef double complex acc = 1.0
    cdef Py_ssize_t i
    for i in range(k):
        acc = acc * z
    return acc


def bs_expand(const cnp.int64_t[:, ::1] occ, const double complex[::1] amps,
              Py_ssize_t a, Py_ssize_t b, double complex t, double complex r):
    cdef Py_ssize_t n_terms = occ.shape[0]
    cdef Py_ssize_t n_modes = occ.shape[1]
    cdef Py_ssize_t i, j, k, m, col, row, na, nb, n_tot, lo, hi
    cdef Py_ssize_t max_a = 0, max_b = 0, total = 0

    for i in range(n_terms):
        na = occ[i, a]
        nb = occ[i, b]
        if na > max_a:
            max_a = na
        if nb > max_b:
            max_b = nb
        total += na + nb + 1

    out_occ_arr = np.empty((total, n_modes), dtype=np.int64)
    out_amp_arr = np.empty(total, dtype=np.complex128)
    cdef cnp.int64_t[:, ::1] out_occ = out_occ_arr
    cdef double complex[::1] out_amp = out_amp_arr

    cdef Py_ssize_t max_n = max_a + max_b
    fact_arr = np.ones(max_n + 1, dtype=np.float64)
    cdef double[::1] fact = fact_arr
    for i in range(1, max_n + 1):
        fact[i] = fact[i - 1] * i

    # coefficient table indexed [na, nb, m], filled lazily
    span = max_n + 1
    table_arr = np.zeros((max_a + 1, max_b + 1, span), dtype=np.complex128)
    done_arr = np.zeros((max_a + 1, max_b + 1), dtype=np.uint8)
    cdef double complex[:, :, ::1] table = table_arr
    cdef unsigned char[:, ::1] done = done_arr

    cdef double complex rc = -r.conjugate()
    cdef double complex tc = t.conjugate()
    cdef double complex acc
    cdef double binom_a, binom_b, scale

    row = 0
    for i in range(n_terms):
        na = occ[i, a]
        nb = occ[i, b]
        n_tot = na + nb
        if not done[na, nb]:
            for m in range(n_tot + 1):
                acc = 0.0
                lo = m - nb if m > nb else 0
                hi = na if na < m else m
                for j in range(lo, hi + 1):
                    k = m - j
                    binom_a = fact[na] / (fact[j] * fact[na - j])
                    binom_b = fact[nb] / (fact[k] * fact[nb - k])
                    acc = acc + (binom_a * binom_b) * _cpow(t, j) * _cpow(r, na - j) \
                        * _cpow(rc, k) * _cpow(tc, nb - k)
                scale = sqrt(fact[m] * fact[n_tot - m] / (fact[na] * fact[nb]))
                table[na, nb, m] = acc * scale
            done[na, nb] = 1
        for m in range(n_tot + 1):
            for col in range(n_modes):
                out_occ[row, col] = occ[i, col]
            out_occ[row, a] = m
            out_occ[row, b] = n_tot - m
            out_amp[row] = amps[i] * table[na, nb, m]
            row += 1

    return out_occ_arr, out_amp_arr
