# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: Kendall's tau-b and gridded copula evaluation.

Every function here has a numpy twin in ``_pykernels`` with the same
signature and semantics; ``_backend`` picks one at import time.
"""
import numpy as np

from libc.math cimport sqrt, floor


cdef inline void _locate(double x, Py_ssize_t g, Py_ssize_t *idx, double *frac) noexcept nogil:
    # nodes sit at (i + 0.5) / g; clamp outside the first and last node
    cdef double s = x * g - 0.5
    cdef Py_ssize_t i
    if s <= 0.0:
        idx[0] = 0
        frac[0] = 0.0
    elif s >= g - 1:
        idx[0] = g - 2
        frac[0] = 1.0
    else:
        i = <Py_ssize_t>floor(s)
        if i > g - 2:
            i = g - 2
        idx[0] = i
        frac[0] = s - i


cdef inline double _column_integral(const double[:, ::1] c, const double[:, ::1] cum,
                                    Py_ssize_t j, double x, Py_ssize_t g) noexcept nogil:
    cdef double delta = 1.0 / g
    cdef double s = x * g - 0.5
    cdef double t, ds
    cdef Py_ssize_t i
    if s <= 0.0:
        return c[0, j] * x
    if s >= g - 1:
        return cum[g - 1, j] + c[g - 1, j] * (x - (g - 0.5) * delta)
    i = <Py_ssize_t>floor(s)
    if i > g - 2:
        i = g - 2
    t = s - i
    ds = t * delta
    return cum[i, j] + c[i, j] * ds + (c[i + 1, j] - c[i, j]) * ds * t * 0.5


cdef inline double _hval(const double[:, ::1] c, const double[:, ::1] cum,
                         double x, Py_ssize_t jv, double tv, Py_ssize_t g) noexcept nogil:
    cdef double h = (1.0 - tv) * _column_integral(c, cum, jv, x, g)
    if tv > 0.0:
        h += tv * _column_integral(c, cum, jv + 1, x, g)
    return h


def grid_pdf(const double[:, ::1] c, const double[::1] u, const double[::1] v):
    cdef Py_ssize_t n = u.shape[0], g = c.shape[0], k, i, j
    cdef double tu, tv
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(n):
            _locate(u[k], g, &i, &tu)
            _locate(v[k], g, &j, &tv)
            o[k] = ((1.0 - tu) * ((1.0 - tv) * c[i, j] + tv * c[i, j + 1])
                    + tu * ((1.0 - tv) * c[i + 1, j] + tv * c[i + 1, j + 1]))
    return out


def grid_hfunc(const double[:, ::1] c, const double[:, ::1] cum,
               const double[::1] u, const double[::1] v):
    cdef Py_ssize_t n = u.shape[0], g = c.shape[0], k, j
    cdef double tv, h
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(n):
            _locate(v[k], g, &j, &tv)
            h = _hval(c, cum, u[k], j, tv, g)
            if h < 0.0:
                h = 0.0
            elif h > 1.0:
                h = 1.0
            o[k] = h
    return out


def grid_hinv(const double[:, ::1] c, const double[:, ::1] cum,
              const double[::1] w, const double[::1] v, double tol, int maxiter):
    cdef Py_ssize_t n = w.shape[0], g = c.shape[0], k, j
    cdef double tv, lo, hi, mid
    cdef int it
    cdef bint failed = False
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(n):
            _locate(v[k], g, &j, &tv)
            lo = 0.0
            hi = 1.0
            it = 0
            while hi - lo > tol:
                if it >= maxiter:
                    failed = True
                    break
                mid = 0.5 * (lo + hi)
                if _hval(c, cum, mid, j, tv, g) < w[k]:
                    lo = mid
                else:
                    hi = mid
                it += 1
            o[k] = 0.5 * (lo + hi)
    if failed:
        raise RuntimeError(f"bisection did not reach tol={tol} within {maxiter} iterations")
    return out


cdef long long _count_inversions(double[::1] a, double[::1] buf) noexcept nogil:
    # bottom-up merge sort; counts pairs i < j with a[i] > a[j]
    cdef Py_ssize_t n = a.shape[0], width = 1, lo, mid, hi, i, j, k
    cdef long long swaps = 0
    cdef double[::1] src = a, dst = buf, tmp
    cdef bint flipped = False
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = lo + 2 * width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    swaps += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo += 2 * width
        tmp = src
        src = dst
        dst = tmp
        flipped = not flipped
        width *= 2
    if flipped:
        for i in range(n):
            a[i] = src[i]
    return swaps


cdef long long _tie_pairs(const double[::1] a) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], i, run = 1
    cdef long long total = 0
    for i in range(1, n):
        if a[i] == a[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


def kendall_tau_b(x, y):
    """Kendall's tau-b in O(n log n) (Knight's algorithm)."""
    xa = np.ascontiguousarray(x, dtype=np.float64)
    ya = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xa.shape[0], i, run
    if ya.shape[0] != n:
        raise ValueError("kendall_tau_b: length mismatch")
    if n < 2:
        raise ValueError("kendall_tau_b: need at least two observations")
    order = np.lexsort((ya, xa))
    cdef double[::1] xs = xa[order]
    cdef double[::1] ys = ya[order].copy()
    cdef double[::1] buf = np.empty(n, dtype=np.float64)
    cdef long long n0 = (<long long>n) * (n - 1) // 2
    cdef long long n1, n2, n3 = 0, swaps
    with nogil:
        n1 = _tie_pairs(xs)
        run = 1
        for i in range(1, n):
            if xs[i] == xs[i - 1] and ys[i] == ys[i - 1]:
                run += 1
            else:
                n3 += (<long long>run) * (run - 1) // 2
                run = 1
        n3 += (<long long>run) * (run - 1) // 2
        swaps = _count_inversions(ys, buf)
        n2 = _tie_pairs(ys)
    if n1 == n0 or n2 == n0:
        raise ValueError("kendall_tau_b: undefined for a constant input vector")
    return (n0 - n1 - n2 + n3 - 2 * swaps) / sqrt(<double>(n0 - n1) * <double>(n0 - n2))
