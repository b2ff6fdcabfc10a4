"""Pure numpy implementation of the hot kernels.

Used when the compiled extension ``zwmsim._kernels`` is unavailable or when
``ZWMSIM_PURE_PYTHON`` is set. Signatures and outputs match the Cython module
exactly (same term ordering), so the two are interchangeable.
"""

from math import comb, factorial, sqrt

import numpy as np


def bs_coefficients(na: int, nb: int, t: complex, r: complex) -> np.ndarray:
    """Output amplitudes of ``|na, nb>`` under the two-mode beam splitter.

    The creation operators transform as ``a+ -> t a+ + r b+`` and
    ``b+ -> -conj(r) a+ + conj(t) b+``. Entry ``m`` is the amplitude of
    ``|m, na + nb - m>``.
    """
    n_tot = na + nb
    out = np.zeros(n_tot + 1, dtype=np.complex128)
    rc = -np.conj(r)
    tc = np.conj(t)
    for j in range(na + 1):
        cj = comb(na, j) * t**j * r ** (na - j)
        for k in range(nb + 1):
            out[j + k] += cj * comb(nb, k) * rc**k * tc ** (nb - k)
    norm = factorial(na) * factorial(nb)
    for m in range(n_tot + 1):
        out[m] *= sqrt(factorial(m) * factorial(n_tot - m) / norm)
    return out


def bs_expand(occ, amps, a, b, t, r):
    """Expand every term through a beam splitter on columns ``a`` and ``b``.

    Returns unmerged ``(occupations, amplitudes)``; term ``i`` of the input
    contributes ``na + nb + 1`` consecutive output rows ordered by the photon
    count left in mode ``a``.
    """
    occ = np.asarray(occ, dtype=np.int64)
    amps = np.asarray(amps, dtype=np.complex128)
    na = occ[:, a]
    nb = occ[:, b]
    width = na + nb + 1
    total = int(width.sum())
    starts = np.concatenate(([0], np.cumsum(width)[:-1]))

    out_occ = np.repeat(occ, width, axis=0)
    out_amp = np.empty(total, dtype=np.complex128)

    pair_key = na * (int(nb.max(initial=0)) + 1) + nb
    for key in np.unique(pair_key):
        sel = np.nonzero(pair_key == key)[0]
        ka, kb = int(na[sel[0]]), int(nb[sel[0]])
        coef = bs_coefficients(ka, kb, t, r)
        n_tot = ka + kb
        rows = starts[sel][:, None] + np.arange(n_tot + 1)[None, :]
        out_amp[rows] = amps[sel][:, None] * coef[None, :]
        out_occ[rows, a] = np.arange(n_tot + 1)[None, :]
        out_occ[rows, b] = n_tot - np.arange(n_tot + 1)[None, :]
    return out_occ, out_amp
