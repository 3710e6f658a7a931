# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled polynomial kernels (see ``_kernels_py`` for the reference version)."""

import numpy as np

from libc.math cimport fabs, fmax

cdef enum:
    MAXDEG_C = 24

MAXDEG = MAXDEG_C
ROOT_TOL = 1e-12
# ties: values within TIE_TOL * max(1, |max|) of the maximum
TIE_TOL = 1e-14

cdef double _ROOT_TOL = 1e-12
cdef double _TIE_TOL = 1e-14


cdef inline double _horner(const double* c, int deg, double t) noexcept nogil:
    cdef double acc = 0.0
    cdef int k
    for k in range(deg, -1, -1):
        acc = acc * t + c[k]
    return acc


cdef inline int _trim(const double* c, int deg) noexcept nogil:
    while deg > 0 and c[deg] == 0.0:
        deg -= 1
    return deg


cdef double _bisect(const double* c, int deg, double lo, double hi, double flo) noexcept nogil:
    cdef double mid, fm
    while hi - lo > _ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = _horner(c, deg, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef int _roots(const double* c, int deg, double lo, double hi, double* out) noexcept nogil:
    # Roots of c inside [lo, hi], ascending. Critical points of c split the
    # interval into monotone runs, each holding at most one sign change.
    cdef double d[MAXDEG_C + 1]
    cdef double bounds[MAXDEG_C + 2]
    cdef int k, nb, n = 0
    cdef double r, fa, fb
    deg = _trim(c, deg)
    if deg == 0:
        return 0
    if deg == 1:
        r = -c[0] / c[1]
        if lo <= r <= hi:
            out[0] = r
            return 1
        return 0
    for k in range(1, deg + 1):
        d[k - 1] = k * c[k]
    bounds[0] = lo
    nb = _roots(d, deg - 1, lo, hi, bounds + 1) + 2
    bounds[nb - 1] = hi
    fa = _horner(c, deg, lo)
    if fa == 0.0:
        out[n] = lo
        n += 1
    for k in range(nb - 1):
        fb = _horner(c, deg, bounds[k + 1])
        if fb == 0.0:
            if n == 0 or out[n - 1] < bounds[k + 1]:
                out[n] = bounds[k + 1]
                n += 1
        elif fa != 0.0 and ((fa < 0.0) != (fb < 0.0)):
            out[n] = _bisect(c, deg, bounds[k], bounds[k + 1], fa)
            n += 1
        fa = fb
    return n


cdef int _candidates(const double* c, int deg, double lo, double hi,
                     double* ts, double* vs) noexcept nogil:
    cdef double d[MAXDEG_C + 1]
    cdef double crit[MAXDEG_C + 1]
    cdef int k, nc, n = 0
    deg = _trim(c, deg)
    ts[0] = lo
    vs[0] = _horner(c, deg, lo)
    if hi <= lo:
        return 1
    n = 1
    if deg >= 2:
        for k in range(1, deg + 1):
            d[k - 1] = k * c[k]
        nc = _roots(d, deg - 1, lo, hi, crit)
        for k in range(nc):
            if lo < crit[k] < hi:
                ts[n] = crit[k]
                vs[n] = _horner(c, deg, crit[k])
                n += 1
    ts[n] = hi
    vs[n] = _horner(c, deg, hi)
    return n + 1


cdef double _piece_max(const double* c, int deg, double lo, double hi) noexcept nogil:
    cdef double ts[MAXDEG_C + 2]
    cdef double vs[MAXDEG_C + 2]
    cdef int k, n
    cdef double best
    n = _candidates(c, deg, lo, hi, ts, vs)
    best = vs[0]
    for k in range(1, n):
        if vs[k] > best:
            best = vs[k]
    return best


cdef void _pp_argmax(const double* breaks, const double* coefs, int npieces, int deg,
                     double* t_out, double* v_out) noexcept nogil:
    cdef double ts[MAXDEG_C + 2]
    cdef double vs[MAXDEG_C + 2]
    cdef double best, pm
    cdef int p, k, n
    cdef int stride = deg + 1
    best = _piece_max(coefs, deg, breaks[0], breaks[1])
    for p in range(1, npieces):
        pm = _piece_max(coefs + p * stride, deg, breaks[p], breaks[p + 1])
        if pm > best:
            best = pm
    best = best - _TIE_TOL * fmax(1.0, fabs(best))
    for p in range(npieces):
        n = _candidates(coefs + p * stride, deg, breaks[p], breaks[p + 1], ts, vs)
        for k in range(n):
            if vs[k] >= best:
                t_out[0] = ts[k]
                v_out[0] = vs[k]
                return


def _as_coeffs(coeffs):
    arr = np.ascontiguousarray(coeffs, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError("coefficients must be a non-empty 1-D sequence")
    if arr.shape[0] - 1 > MAXDEG_C:
        raise ValueError(f"degree {arr.shape[0] - 1} exceeds kernel limit {MAXDEG_C}")
    return arr


def poly_roots(coeffs, double lo, double hi):
    """Real roots of a polynomial (ascending coefficients) inside [lo, hi]."""
    cdef double[::1] c = _as_coeffs(coeffs)
    cdef double out[MAXDEG_C + 1]
    cdef int n = _roots(&c[0], c.shape[0] - 1, lo, hi, out)
    return [out[k] for k in range(n)]


def poly_argmax(coeffs, double lo, double hi):
    """Global maximum of a polynomial on [lo, hi]; smallest maximizer on ties."""
    cdef double[::1] c = _as_coeffs(coeffs)
    cdef double br[2]
    cdef double t, v
    br[0] = lo
    br[1] = hi
    _pp_argmax(br, &c[0], 1, c.shape[0] - 1, &t, &v)
    return t, v


def pp_argmax(breaks, coefs):
    """Maximize a continuous piecewise polynomial given per-piece coefficients."""
    t, v = pp_argmax_batch(breaks, np.asarray(coefs, dtype=np.float64)[None, :, :])
    return float(t[0]), float(v[0])


def pp_argmax_batch(breaks, coefs):
    """Row-wise :func:`pp_argmax` over an array of shape (rows, pieces, degree + 1)."""
    cdef double[::1] br = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef double[:, :, ::1] cf = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef Py_ssize_t nrows = cf.shape[0], r
    cdef int npieces = cf.shape[1]
    cdef int deg = cf.shape[2] - 1
    if br.shape[0] != npieces + 1:
        raise ValueError("need one more breakpoint than pieces")
    if deg > MAXDEG_C or deg < 0:
        raise ValueError(f"degree {deg} outside kernel range")
    t_arr = np.empty(nrows, dtype=np.float64)
    v_arr = np.empty(nrows, dtype=np.float64)
    cdef double[::1] t_out = t_arr
    cdef double[::1] v_out = v_arr
    if nrows == 0:
        return t_arr, v_arr
    with nogil:
        for r in range(nrows):
            _pp_argmax(&br[0], &cf[r, 0, 0], npieces, deg, &t_out[r], &v_out[r])
    return t_arr, v_arr
