import math
from decimal import Decimal, localcontext
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chowrobbins.bounds import Enclosure, Position, clairvoyant_upper, trivial_lower
from chowrobbins.rounding import UP, dir_div, dir_sqrt
from chowrobbins.rounding import PI_UP

PI_50 = Decimal("3.14159265358979323846264338327950288419716939937510")


def exact_upper(a, n):
    """The closed-form upper bound in 60-digit decimal arithmetic."""
    with localcontext() as ctx:
        ctx.prec = 60
        base = max(Decimal(a) / n, Decimal("0.5"))
        err = (PI_50 / n).sqrt() / 4
        d = abs(2 * a - n)
        if d:
            err = min(err, Decimal(1) / (2 * d))
        return min(base + err, Decimal(1))


@st.composite
def positions(draw, max_n=10**7):
    n = draw(st.integers(1, max_n))
    return Position(draw(st.integers(0, n)), n)


def test_position_validation():
    with pytest.raises(ValueError):
        Position(3, 2)
    with pytest.raises(ValueError):
        Position(-1, 2)
    p = Position.from_score(5, 3)
    assert (p.a, p.n, p.tails, p.difference) == (5, 8, 3, 2)
    assert str(p) == "5-3"


def test_enclosure():
    e = Enclosure(0.25, 0.75)
    assert 0.5 in e and 0.8 not in e
    assert e.width == 0.5
    with pytest.raises(ValueError):
        Enclosure(0.75, 0.25)


def test_trivial_lower_examples():
    assert trivial_lower(Position(3, 10)) == 0.5
    assert trivial_lower(Position(1, 1)) == 1.0
    v = trivial_lower(Position(2, 3))
    assert Fraction(v) <= Fraction(2, 3) and v > 0.6666


def test_n_zero_rejected():
    with pytest.raises(ValueError):
        trivial_lower(Position(0, 0))
    with pytest.raises(ValueError):
        clairvoyant_upper(Position(0, 0))


@pytest.mark.parametrize("a,n,approx", [(5, 8, 0.78166), (2, 4, 0.72156), (6, 10, 0.74012)])
def test_clairvoyant_examples(a, n, approx):
    v = clairvoyant_upper(Position(a, n))
    assert abs(v - approx) < 1e-5
    assert Decimal(v) >= exact_upper(a, n)


def test_clairvoyant_clamps_at_one():
    assert clairvoyant_upper(Position(100, 100)) == 1.0


def test_midline_uses_sqrt_branch():
    n = 10**7
    v = clairvoyant_upper(Position(n // 2, n))
    assert Decimal(v) >= exact_upper(n // 2, n)
    assert v - 0.5 == pytest.approx(0.25 * math.sqrt(math.pi / n), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(positions())
def test_upper_is_sound_and_close(p):
    v = clairvoyant_upper(p)
    exact = exact_upper(p.a, p.n)
    assert Decimal(v) >= exact
    # a handful of outward roundings at most
    assert Decimal(v) - exact <= Decimal(2) ** -49


@settings(max_examples=300, deadline=None)
@given(positions())
def test_lower_is_sound(p):
    v = trivial_lower(p)
    assert Fraction(v) <= max(Fraction(p.a, p.n), Fraction(1, 2))


@settings(max_examples=300, deadline=None)
@given(positions())
def test_upper_dominates_lower_by_at_most_sqrt_term(p):
    lo, hi = trivial_lower(p), clairvoyant_upper(p)
    assert lo <= hi
    sqrt_term = 0.25 * dir_sqrt(dir_div(PI_UP, float(p.n), UP), UP)
    assert Fraction(hi) - Fraction(lo) <= Fraction(sqrt_term) + Fraction(2.0 ** -51)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 2000), st.integers(1, 10**6))
def test_error_term_decays_along_a_difference(d, n):
    n = n + d if (n + d) % 2 == 0 else n + d + 1
    p, q = Position((n + d) // 2, n), Position((n + 2 + d) // 2, n + 2)
    hp, hq = clairvoyant_upper(p), clairvoyant_upper(q)
    if hp == 1.0:
        return  # clamped, the error term is hidden
    gap_p = Fraction(hp) - Fraction(p.a, p.n)
    gap_q = Fraction(hq) - Fraction(q.a, q.n)
    # two outward roundings of slack in the bound at p
    assert gap_q <= gap_p + Fraction(2.0 ** -51)
