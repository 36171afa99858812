"""Numba row kernels for the backward sweep.

Row ``n`` stores positions ``a`` in ``[band_lo(n), band_hi(n)]`` at index
``a - band_lo(n)``.  All stored values lie in [1/2, 1]: lower bounds never drop
below the trivial 1/2 and upper bounds are clamped at 1.  The span kernels
rely on that range to replace ``nextafter`` by a fixed spacing.

Positions whose children are both stored in row ``n + 1`` form a contiguous
interior handled by the span kernels; the at most two positions at the band
edges take the scalar path with closed-form seeds for the missing child.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .bounds import clairvoyant_upper_core, trivial_lower_core
from .rounding import DOWN, PI_UP, UP, div_core, mul_core, sqrt_core, two_prod

STOP = 0
CONTINUE = 1
UNKNOWN = 2

# spacing of doubles in [1, 2) and in [1/2, 1)
_ULP_1 = 2.0 ** -52
_ULP_HALF = 2.0 ** -53
_SPLITTER = 134217729.0
_SMALL_N = 2 ** 26


@njit(cache=True)
def band_lo(n, h):
    return max(0, (n - h + 1) // 2)


@njit(cache=True)
def band_hi(n, h):
    return min(n, (n + h) // 2)


@njit(cache=True)
def avg_unit(x, y, sign):
    """(x + y)/2 rounded down (sign -1) or up (sign +1); x, y in [1/2, 1]."""
    s = x + y
    bb = s - x
    err = sign * ((x - (s - bb)) + (y - bb))
    return (s + sign * _ULP_1 * (err > 0.0)) * 0.5


@njit(cache=True)
def payoff_bounds(a, n):
    """Directed roundings (down, up) of a/n for n/2 < a <= n."""
    fa = float(a)
    fn = float(n)
    q = fa / fn
    p, e = two_prod(q, fn)
    r = (p - fa) + e  # sign of q*n - a
    return q - _ULP_HALF * (r > 0.0), q + _ULP_HALF * (r < 0.0)


@njit(cache=True)
def sqrt_term(n):
    """sqrt(pi/n)/4 rounded up."""
    return 0.25 * sqrt_core(div_core(PI_UP, float(n), UP), UP)


def inverse_gap_table(h: int) -> np.ndarray:
    """Row ``p`` holds 1/(2k) rounded up for k = 2j + p (inf for k = 0).

    Splitting by parity makes the lookups of one row contiguous.
    """
    return _inverse_gap_table(h)


@njit(cache=True)
def _inverse_gap_table(h):
    width = h // 2 + 2
    t = np.empty((2, width))
    for p in range(2):
        for j in range(width):
            k = 2 * j + p
            t[p, j] = np.inf if k == 0 else div_core(1.0, 2.0 * k, UP)
    return t


@njit(cache=True)
def _seed_upper(base, err):
    # base in [1/2, 1], err in (0, 1/2]: same result as clairvoyant_upper_core
    s = base + err
    bb = s - base
    e = (base - (s - bb)) + (err - bb)
    ulp = _ULP_HALF + _ULP_HALF * (s >= 1.0)
    return min(s + ulp * (e > 0.0), 1.0)


@njit(cache=True)
def fill_horizon(N, h, L, U):
    lo = band_lo(N, h)
    for a in range(lo, band_hi(N, h) + 1):
        L[a - lo] = trivial_lower_core(a, N)
        U[a - lo] = clairvoyant_upper_core(a, N)
    return lo


@njit(cache=True)
def _child(a, m, lo1, hi1, L1, U1):
    if a >= lo1 and a <= hi1:
        return L1[a - lo1], U1[a - lo1]
    return trivial_lower_core(a, m), clairvoyant_upper_core(a, m)


@njit(cache=True)
def _edge(a, n, lo, lo1, hi1, L1, U1, L, U, CL, CU, clip):
    m = n + 1
    tl, tu = _child(a, m, lo1, hi1, L1, U1)
    hl, hu = _child(a + 1, m, lo1, hi1, L1, U1)
    cl = avg_unit(tl, hl, -1.0)
    cu = avg_unit(tu, hu, 1.0)
    i = a - lo
    CL[i] = cl
    CU[i] = cu
    if 2 * a > n:
        qd, qu = payoff_bounds(a, n)
        cl = max(cl, qd)
        cu = max(cu, qu)
    if clip and n > 0:
        cu = min(cu, clairvoyant_upper_core(a, n))
    L[i] = cl
    U[i] = cu


# The span kernels take zero-based slice views so LLVM can vectorize them;
# rounding adjustments are selects, not branches.


@njit(cache=True)
def _avg_span(tail, head, out, sign):
    for i in range(out.shape[0]):
        out[i] = avg_unit(tail[i], head[i], sign)


@njit(cache=True)
def _copy_span(src, dst):
    for i in range(src.shape[0]):
        dst[i] = src[i]


@njit(cache=True)
def _payoff_span(n, a_first, CL, CU, L, U):
    """L = max(CL, a/n down), U = max(CU, a/n up) for positions above the midline."""
    fn = float(n)
    for i in range(CL.shape[0]):
        fa = float(a_first + i)
        q = fa / fn
        # n < 2**26 and both halves of q have <= 27 bits: products exact
        c = _SPLITTER * q
        qh = c - (c - q)
        r = (qh * fn - fa) + (q - qh) * fn
        L[i] = max(CL[i], q - _ULP_HALF * (r > 0.0))
        U[i] = max(CU[i], q + _ULP_HALF * (r < 0.0))


@njit(cache=True)
def _payoff_span_wide(n, a_first, CL, CU, L, U):
    for i in range(CL.shape[0]):
        qd, qu = payoff_bounds(a_first + i, n)
        L[i] = max(CL[i], qd)
        U[i] = max(CU[i], qu)


@njit(cache=True)
def _clip_below(U, j_first, t1, tab):
    # |2a - n| = 2 * (j_first - i) + parity
    for i in range(U.shape[0]):
        err = min(t1, tab[j_first - i])
        U[i] = min(U[i], _seed_upper(0.5, err))


@njit(cache=True)
def _clip_above(n, a_first, U, t1, tab):
    fn = float(n)
    j0 = (2 * a_first - n) // 2
    for i in range(U.shape[0]):
        a = a_first + i
        fa = float(a)
        q = fa / fn
        c = _SPLITTER * q
        qh = c - (c - q)
        r = (qh * fn - fa) + (q - qh) * fn
        qu = q + _ULP_HALF * (r < 0.0)
        err = min(t1, tab[j0 + i])
        U[i] = min(U[i], _seed_upper(qu, err))


@njit(cache=True)
def _clip_above_wide(n, a_first, U, t1, tab):
    j0 = (2 * a_first - n) // 2
    for i in range(U.shape[0]):
        a = a_first + i
        qu = payoff_bounds(a, n)[1]
        err = min(t1, tab[j0 + i])
        U[i] = min(U[i], _seed_upper(qu, err))


@njit(cache=True)
def _interior(n, lo, lo1, a0, a1, L1, U1, L, U, CL, CU, t1, inv, clip):
    i0 = a0 - lo
    i1 = a1 - lo + 1
    j0 = a0 - lo1
    # first index strictly above the midline
    ip = min(max(i0, n // 2 + 1 - lo), i1)
    j1 = i1 + (lo - lo1)
    _avg_span(L1[j0:j1], L1[j0 + 1:j1 + 1], CL[i0:i1], -1.0)
    _avg_span(U1[j0:j1], U1[j0 + 1:j1 + 1], CU[i0:i1], 1.0)
    _copy_span(CL[i0:ip], L[i0:ip])
    _copy_span(CU[i0:ip], U[i0:ip])
    narrow = n < _SMALL_N
    if narrow:
        _payoff_span(n, lo + ip, CL[ip:i1], CU[ip:i1], L[ip:i1], U[ip:i1])
    else:
        _payoff_span_wide(n, lo + ip, CL[ip:i1], CU[ip:i1], L[ip:i1], U[ip:i1])
    if clip:
        tab = inv[n % 2]
        _clip_below(U[i0:ip], (n - 2 * a0) // 2, t1, tab)
        if narrow:
            _clip_above(n, lo + ip, U[ip:i1], t1, tab)
        else:
            _clip_above_wide(n, lo + ip, U[ip:i1], t1, tab)


@njit(cache=True)
def step_row(n, h, lo1, hi1, L1, U1, L, U, CL, CU, inv, clip):
    """Fill row ``n`` from row ``n + 1`` (positions ``[lo1, hi1]`` in L1/U1).

    A child outside ``[lo1, hi1]`` takes its closed-form seed.  ``CL``/``CU``
    receive the continuation enclosure, ``L``/``U`` the value enclosure.  With
    ``clip`` set, upper bounds are intersected with the closed-form bound of
    the position itself.
    """
    lo = band_lo(n, h)
    hi = band_hi(n, h)
    a0 = max(lo, lo1)
    a1 = min(hi, hi1 - 1)
    if a0 > a1:
        a0 = hi + 1
        a1 = hi
    for a in range(lo, a0):
        _edge(a, n, lo, lo1, hi1, L1, U1, L, U, CL, CU, clip)
    for a in range(a1 + 1, hi + 1):
        _edge(a, n, lo, lo1, hi1, L1, U1, L, U, CL, CU, clip)
    if a0 <= a1:
        t1 = sqrt_term(n) if (clip and n > 0) else 1.0
        _interior(n, lo, lo1, a0, a1, L1, U1, L, U, CL, CU, t1, inv, clip)
    return lo, hi


@njit(cache=True, parallel=True)
def step_row_chunked(n, h, lo1, hi1, L1, U1, L, U, CL, CU, inv, clip, chunks):
    """Same as ``step_row`` with the interior split into ``chunks`` parallel parts.

    Every entry is computed by the same expression as in ``step_row``, so the
    output is bit-identical for any chunk count.
    """
    lo = band_lo(n, h)
    hi = band_hi(n, h)
    a0 = max(lo, lo1)
    a1 = min(hi, hi1 - 1)
    if a0 > a1:
        a0 = hi + 1
        a1 = hi
    for a in range(lo, a0):
        _edge(a, n, lo, lo1, hi1, L1, U1, L, U, CL, CU, clip)
    for a in range(a1 + 1, hi + 1):
        _edge(a, n, lo, lo1, hi1, L1, U1, L, U, CL, CU, clip)
    if a0 <= a1:
        t1 = sqrt_term(n) if (clip and n > 0) else 1.0
        count = a1 - a0 + 1
        for c in prange(chunks):
            b0 = a0 + (count * c) // chunks
            b1 = a0 + (count * (c + 1)) // chunks - 1
            if b0 <= b1:
                _interior(n, lo, lo1, b0, b1, L1, U1, L, U, CL, CU, t1, inv, clip)
    return lo, hi


@njit(cache=True)
def run_rows(n_from, n_to, h, lo1, L1, U1, L, U, CL, CU, inv, clip):
    """Sweep rows ``n_from`` down to ``n_to``; row ``n_from + 1`` is in L1/U1.

    Returns ``(lo, L, U, L1, U1)``: the last computed row's offset and
    values, then the other buffer pair as scratch.
    """
    hi1 = band_hi(n_from + 1, h)
    for n in range(n_from, n_to - 1, -1):
        lo, hi = step_row(n, h, lo1, hi1, L1, U1, L, U, CL, CU, inv, clip)
        L1, L = L, L1
        U1, U = U, U1
        lo1 = lo
        hi1 = hi
    return lo1, L1, U1, L, U


@njit(cache=True)
def run_rows_chunked(n_from, n_to, h, lo1, L1, U1, L, U, CL, CU, inv, clip, chunks):
    hi1 = band_hi(n_from + 1, h)
    for n in range(n_from, n_to - 1, -1):
        lo, hi = step_row_chunked(n, h, lo1, hi1, L1, U1, L, U, CL, CU, inv, clip, chunks)
        L1, L = L, L1
        U1, U = U, U1
        lo1 = lo
        hi1 = hi
    return lo1, L1, U1, L, U


@njit(cache=True)
def classify_core(a, n, cl, cu):
    """Certified comparison of a continuation enclosure with a/n."""
    if n == 0:
        return CONTINUE
    if mul_core(cl, float(n), DOWN) > a:
        return CONTINUE
    if mul_core(cu, float(n), UP) <= a:
        return STOP
    return UNKNOWN


@njit(cache=True)
def classify_row(n, lo, CL, CU, out):
    for i in range(out.shape[0]):
        out[i] = classify_core(lo + i, n, CL[i], CU[i])


def new_buffers(h: int) -> list[np.ndarray]:
    return [np.empty(h + 2) for _ in range(6)]
