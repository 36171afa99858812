"""Directed-rounding scalar arithmetic on binary64.

Every operation first computes the round-to-nearest result and then recovers
the exact rounding error with an error-free transformation (TwoSum, Dekker's
TwoProduct).  The sign of that error tells whether the nearest result sits
above or below the exact real value, so a single step to the adjacent float
gives the correctly rounded result in the requested direction.  When the
error cannot be certified (underflow range) the result is nudged outward
unconditionally, which is conservative.

The ``*_core`` functions are numba kernels shared with the induction engine;
the public ``dir_*`` functions validate their inputs and raise on domain
errors instead of returning NaN.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction

import numpy as np
from numba import njit

__all__ = [
    "Direction",
    "PI_UP",
    "dir_add",
    "dir_mul",
    "dir_div",
    "dir_sqrt",
    "dir_avg",
    "next_up",
    "next_down",
]


class Direction(enum.IntEnum):
    DOWN = -1
    UP = 1


DOWN = -1
UP = 1

# Smallest double strictly above pi.
PI_UP = math.nextafter(math.pi, math.inf)
assert Fraction(PI_UP) > Fraction("3.14159265358979323846264338327950288419716939937510")

_SPLITTER = 134217729.0  # 2**27 + 1
# Below this magnitude the low half of a product may be subnormal and
# Dekker's error term is no longer exact.
_TINY = 2.0 ** -960
# Above this magnitude the splitter can overflow.
_HUGE = 2.0 ** 995
_INF = np.inf


@njit(cache=True)
def next_up(x):
    return np.nextafter(x, _INF)


@njit(cache=True)
def next_down(x):
    return np.nextafter(x, -_INF)


@njit(cache=True)
def two_sum(x, y):
    s = x + y
    bb = s - x
    err = (x - (s - bb)) + (y - bb)
    return s, err


@njit(cache=True)
def _split(x):
    c = _SPLITTER * x
    hi = c - (c - x)
    return hi, x - hi


@njit(cache=True)
def two_prod(x, y):
    p = x * y
    xh, xl = _split(x)
    yh, yl = _split(y)
    err = ((xh * yh - p) + xh * yl + xl * yh) + xl * yl
    return p, err


@njit(cache=True)
def _apply(r, err, d):
    """Move ``r`` one step when ``err`` (exact minus r) points in direction ``d``."""
    if d == UP:
        if err > 0.0:
            return next_up(r)
    else:
        if err < 0.0:
            return next_down(r)
    return r


@njit(cache=True)
def _nudge(r, d):
    if d == UP:
        return next_up(r)
    return next_down(r)


@njit(cache=True)
def _certifiable(v):
    a = abs(v)
    return a == 0.0 or (_TINY <= a <= _HUGE)


@njit(cache=True)
def add_core(x, y, d):
    s, err = two_sum(x, y)
    if not np.isfinite(s):
        return s
    return _apply(s, err, d)


@njit(cache=True)
def mul_core(x, y, d):
    p = x * y
    if x == 0.0 or y == 0.0:
        return p
    if p == 0.0 or not (_certifiable(x) and _certifiable(y) and _certifiable(p)):
        return _nudge(p, d)
    p, err = two_prod(x, y)
    return _apply(p, err, d)


@njit(cache=True)
def div_core(x, y, d):
    q = x / y
    if x == 0.0:
        return q
    if not (_certifiable(x) and _certifiable(y) and _certifiable(q)) or q == 0.0:
        return _nudge(q, d)
    p, e = two_prod(q, y)
    # x - p is exact (Sterbenz); r has the sign of x - q*y
    r = (x - p) - e
    if y < 0.0:
        r = -r
    return _apply(q, r, d)


@njit(cache=True)
def sqrt_core(x, d):
    s = np.sqrt(x)
    if x == 0.0:
        return s
    if not _certifiable(x):
        return _nudge(s, d)
    p, e = two_prod(s, s)
    r = (x - p) - e
    return _apply(s, r, d)


@njit(cache=True)
def avg_core(x, y, d):
    return mul_core(add_core(x, y, d), 0.5, d)


def _check(*vals: float) -> None:
    for v in vals:
        if not math.isfinite(v):
            raise ValueError(f"non-finite operand {v!r}")


def _result(r: float) -> float:
    if not math.isfinite(r):
        raise OverflowError("directed result is not finite")
    return float(r)


def dir_add(x: float, y: float, d: Direction) -> float:
    _check(x, y)
    return _result(add_core(float(x), float(y), int(d)))


def dir_mul(x: float, y: float, d: Direction) -> float:
    _check(x, y)
    return _result(mul_core(float(x), float(y), int(d)))


def dir_div(x: float, y: float, d: Direction) -> float:
    _check(x, y)
    if y == 0:
        raise ZeroDivisionError("directed division by zero")
    return _result(div_core(float(x), float(y), int(d)))


def dir_sqrt(x: float, d: Direction) -> float:
    _check(x)
    if x < 0:
        raise ValueError(f"sqrt of negative value {x!r}")
    return _result(sqrt_core(float(x), int(d)))


def dir_avg(x: float, y: float, d: Direction) -> float:
    """(x + y) / 2 rounded in direction ``d``."""
    _check(x, y)
    return _result(avg_core(float(x), float(y), int(d)))
