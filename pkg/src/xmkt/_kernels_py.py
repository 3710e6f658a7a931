"""Pure-Python polynomial kernels.

Reference implementation of the routines in ``_kernels.pyx``. Selected
automatically when the compiled module is missing, or forced with
``XMKT_PURE_PYTHON=1``. Both implementations follow the same candidate
ordering and tie rule, so they agree to rounding.
"""

import numpy as np

ROOT_TOL = 1e-12
# ties: values within TIE_TOL * max(1, |max|) of the maximum
TIE_TOL = 1e-14
MAXDEG = 24


def _horner(c, t):
    acc = 0.0
    for ck in reversed(c):
        acc = acc * t + ck
    return acc


def _trim(c):
    deg = len(c) - 1
    while deg > 0 and c[deg] == 0.0:
        deg -= 1
    return c[: deg + 1]


def _bisect(c, lo, hi, flo):
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = _horner(c, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _roots(c, lo, hi):
    c = _trim(c)
    deg = len(c) - 1
    if deg == 0:
        return []
    if deg == 1:
        r = -c[0] / c[1]
        return [r] if lo <= r <= hi else []
    d = [k * c[k] for k in range(1, deg + 1)]
    bounds = [lo] + _roots(d, lo, hi) + [hi]
    out = []
    fa = _horner(c, lo)
    if fa == 0.0:
        out.append(lo)
    for a, b in zip(bounds[:-1], bounds[1:]):
        fb = _horner(c, b)
        if fb == 0.0:
            if not out or out[-1] < b:
                out.append(b)
        elif fa != 0.0 and (fa < 0.0) != (fb < 0.0):
            out.append(_bisect(c, a, b, fa))
        fa = fb
    return out


def _candidates(c, lo, hi):
    c = _trim(c)
    if hi <= lo:
        return [(lo, _horner(c, lo))]
    pts = [lo]
    if len(c) > 2:
        d = [k * c[k] for k in range(1, len(c))]
        pts.extend(r for r in _roots(d, lo, hi) if lo < r < hi)
    pts.append(hi)
    return [(t, _horner(c, t)) for t in pts]


def poly_roots(coeffs, lo, hi):
    """Real roots of a polynomial (ascending coefficients) inside [lo, hi]."""
    return _roots([float(x) for x in coeffs], float(lo), float(hi))


def poly_argmax(coeffs, lo, hi):
    """Global maximum of a polynomial on [lo, hi]; smallest maximizer on ties."""
    cand = _candidates([float(x) for x in coeffs], float(lo), float(hi))
    best = max(v for _, v in cand)
    floor = best - TIE_TOL * max(1.0, abs(best))
    for t, v in cand:
        if v >= floor:
            return t, v
    raise AssertionError("unreachable")


def _pp_argmax(breaks, rows):
    piece_max = [
        max(v for _, v in _candidates(rows[p], breaks[p], breaks[p + 1]))
        for p in range(len(rows))
    ]
    best = max(piece_max)
    floor = best - TIE_TOL * max(1.0, abs(best))
    for p, pm in enumerate(piece_max):
        if pm >= floor:
            for t, v in _candidates(rows[p], breaks[p], breaks[p + 1]):
                if v >= floor:
                    return t, v
    raise AssertionError("unreachable")


def pp_argmax(breaks, coefs):
    """Maximize a continuous piecewise polynomial given per-piece coefficients.

    ``coefs`` has shape (pieces, degree + 1), each row in the global power
    basis of t.
    """
    breaks = [float(b) for b in breaks]
    rows = [[float(x) for x in row] for row in np.asarray(coefs, dtype=float)]
    return _pp_argmax(breaks, rows)


def pp_argmax_batch(breaks, coefs):
    """Row-wise :func:`pp_argmax` over an array of shape (rows, pieces, degree + 1)."""
    coefs = np.asarray(coefs, dtype=float)
    breaks = [float(b) for b in breaks]
    n = coefs.shape[0]
    t_out = np.empty(n)
    v_out = np.empty(n)
    for r, block in enumerate(coefs.tolist()):
        t_out[r], v_out[r] = _pp_argmax(breaks, block)
    return t_out, v_out
