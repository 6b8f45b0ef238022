# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_kernels_py``.

Butterflies touch disjoint pairs, so splitting the outer loop across threads
does not change any rounding: results are identical for every thread count.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport nextafter, INFINITY

cnp.import_array()


cdef int _log2(Py_ssize_t n) except -1:
    if n == 0 or (n & (n - 1)) != 0:
        raise ValueError(f"length {n} is not a power of two")
    cdef int k = 0
    while (1 << k) < n:
        k += 1
    return k


def wht_inplace(double[::1] a, int threads=1):
    cdef Py_ssize_t n = a.shape[0]
    _log2(n)
    cdef Py_ssize_t h = 1, i, j, blk, nblk
    cdef double x, y
    while h < n:
        nblk = n // (2 * h)
        if nblk >= 2 and threads > 1:
            for blk in prange(nblk, nogil=True, num_threads=threads, schedule="static"):
                i = blk * 2 * h
                for j in range(i, i + h):
                    x = a[j]
                    y = a[j + h]
                    a[j] = x + y
                    a[j + h] = x - y
        else:
            with nogil:
                for blk in range(nblk):
                    i = blk * 2 * h
                    for j in range(i, i + h):
                        x = a[j]
                        y = a[j + h]
                        a[j] = x + y
                        a[j + h] = x - y
        h *= 2


def wht_interval_inplace(double[::1] lo, double[::1] hi, int threads=1):
    cdef Py_ssize_t n = lo.shape[0]
    if hi.shape[0] != n:
        raise ValueError("lo and hi lengths differ")
    _log2(n)
    cdef Py_ssize_t h = 1, i, j, blk, nblk
    cdef double xl, xh, yl, yh
    while h < n:
        nblk = n // (2 * h)
        with nogil:
            for blk in range(nblk):
                i = blk * 2 * h
                for j in range(i, i + h):
                    xl = lo[j]
                    xh = hi[j]
                    yl = lo[j + h]
                    yh = hi[j + h]
                    lo[j] = nextafter(xl + yl, -INFINITY)
                    hi[j] = nextafter(xh + yh, INFINITY)
                    lo[j + h] = nextafter(xl - yh, -INFINITY)
                    hi[j + h] = nextafter(xh - yl, INFINITY)
        h *= 2


def pair_energies(cnp.ndarray coupling):
    """Energies ``-sum_{j<k} K[j,k] s_j s_k`` of all 2**n configurations."""
    cdef double[:, ::1] K = np.ascontiguousarray(coupling, dtype=np.float64)
    cdef Py_ssize_t n = K.shape[0]
    if n > 24:
        raise ValueError("too many sites for exact enumeration")
    cdef Py_ssize_t total = (<Py_ssize_t>1) << n
    out_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] spin = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t c, j, k
    cdef double energy, row
    with nogil:
        for c in range(total):
            for j in range(n):
                spin[j] = -1.0 if (c >> j) & 1 else 1.0
            energy = 0.0
            for j in range(n):
                row = 0.0
                for k in range(j + 1, n):
                    row += K[j, k] * spin[k]
                energy -= spin[j] * row
            out[c] = energy
    return out_arr
