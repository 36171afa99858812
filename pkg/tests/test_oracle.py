import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chowrobbins.bounds import Position, clairvoyant_upper
from chowrobbins.induction import BoxConfig, sweep
from chowrobbins.oracle import (
    PI_UPPER_RATIONAL,
    clairvoyant_finite,
    exact_exceed_probability,
    exact_small_solver,
    lemma1_bound,
    mc_exceed_probability,
    required_flips,
    sqrt_upper,
)

# steps are +1 for heads and -2 for tails when tracking heads - 2 * tails, so
# rising by one has probability r with r = 1/2 + r**3 / 2
GOLDEN = (math.sqrt(5) - 1) / 2


def first_exceeding(a, n, p):
    """Smallest j >= 0 with (a + j)/(n + j) > p, by direct enumeration."""
    j = 0
    while Fraction(a + j, n + j) <= p:
        j += 1
    return j


def test_pi_upper_rational():
    assert PI_UPPER_RATIONAL > Fraction(math.pi)
    assert PI_UPPER_RATIONAL - Fraction(314159265358979323846, 10**20) < Fraction(1, 10**19)


@pytest.mark.parametrize("a,n,p,k", [
    (0, 1, Fraction(3, 5), 2),
    (1, 2, Fraction(2, 3), 2),
    (5, 8, Fraction(9, 10), 23),
    (5, 8, 0.9, 23),
])
def test_required_flips_examples(a, n, p, k):
    assert required_flips(a, n, p).k_star == k


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 60), st.data())
def test_required_flips_matches_enumeration(n, data):
    # a < n so the range of p is not empty
    a = data.draw(st.integers(0, n - 1))
    lo = max(Fraction(a, n), Fraction(1, 2))
    num = data.draw(st.integers(1, 999))
    p = lo + (1 - lo) * Fraction(num, 1000)
    k = required_flips(a, n, p).k_star
    # k - 1 straight heads never exceed p, k straight heads do
    assert k == first_exceeding(a, n, p)
    assert Fraction(a + k - 1, n + k - 1) <= p < Fraction(a + k, n + k)


def test_required_flips_rejects_bad_p():
    with pytest.raises(ValueError):
        required_flips(3, 4, Fraction(3, 4))
    with pytest.raises(ValueError):
        required_flips(1, 4, Fraction(1, 2))
    with pytest.raises(ValueError):
        required_flips(1, 4, 1)
    with pytest.raises(ValueError):
        required_flips(0, 0, 0.6)


def test_lemma1_bound_examples():
    assert lemma1_bound(Fraction(1, 2), 7) == 1.0
    v = lemma1_bound(Fraction(3, 4), 2)
    assert Fraction(v) >= Fraction(4, 9) and v - 4 / 9 < 1e-16
    w = lemma1_bound(0.6, 23)
    exact = Fraction(5, 6) ** 23
    assert Fraction(w) >= exact and w == pytest.approx(0.0150949, abs=1e-7)


def test_mc_current_position_counts():
    e = mc_exceed_probability(1, 1, Fraction(9, 10), 1000, 10, seed=1)
    assert e.successes == e.trials
    assert e.estimate == 1 and e.stderr == 0


def test_mc_lemma_instance():
    p = Fraction(99, 100)
    e = mc_exceed_probability(0, 1, p, 100_000, 1000, seed=3)
    k = required_flips(0, 1, p).k_star
    assert float(e.estimate) <= lemma1_bound(p, k) + 3 * e.stderr


def test_mc_matches_exact_walk():
    p = Fraction(2, 3)
    exact = exact_exceed_probability(1, 2, p, 2000)
    assert float(exact) == pytest.approx(GOLDEN**2, abs=1e-9)
    e = mc_exceed_probability(1, 2, p, 100_000, 10_000, seed=7)
    assert abs(float(e.estimate) - float(exact)) <= 4 * e.stderr


def test_mc_float_p_is_its_decimal_literal():
    # 0.6666666666666666 < 2/3, so reaching exactly 2/3 already exceeds it
    exact = exact_exceed_probability(1, 2, 2 / 3, 2000)
    assert float(exact) == pytest.approx(GOLDEN, abs=1e-9)


def test_mc_is_reproducible():
    a = mc_exceed_probability(3, 7, Fraction(3, 5), 5000, 500, seed=11)
    b = mc_exceed_probability(3, 7, Fraction(3, 5), 5000, 500, seed=11)
    assert a == b


def test_mc_truncation_only_lowers():
    p = Fraction(3, 5)
    short = exact_exceed_probability(2, 4, p, 20)
    long = exact_exceed_probability(2, 4, p, 200)
    assert short <= long


def test_mc_argument_checks():
    with pytest.raises(ValueError):
        mc_exceed_probability(0, 1, Fraction(3, 5), 0, 10, 1)
    with pytest.raises(ValueError):
        mc_exceed_probability(0, 1, Fraction(1, 2), 10, 10, 1)


@settings(max_examples=100, deadline=None)
@given(st.fractions(min_value=0, max_value=10**6))
def test_sqrt_upper(x):
    s = sqrt_upper(x)
    assert s * s >= x
    below = s - Fraction(1, 2**80)
    assert below < 0 or below * below < x


def test_exact_solver_two_three():
    exact = exact_small_solver(BoxConfig(100))
    assert exact[Position(2, 3)].lower > Fraction(2, 3)


def test_exact_solver_tiny_box():
    exact = exact_small_solver(BoxConfig(2, band=2))
    assert exact[Position(1, 1)].lower == exact[Position(1, 1)].upper == 1
    assert exact[Position(0, 0)].lower == Fraction(3, 4)


def test_exact_solver_limit():
    with pytest.raises(ValueError):
        exact_small_solver(BoxConfig(2001))


def test_exact_solver_inside_float_at_300():
    cfg = BoxConfig(300)
    exact = exact_small_solver(cfg)
    res = sweep(cfg, record_limit=300)
    for p, e in exact.items():
        f = res.enclosure(p)
        assert Fraction(f.lower) <= e.lower and e.upper <= Fraction(f.upper)
        mid = (e.lower + e.upper) / 2
        assert Fraction(f.lower) <= mid <= Fraction(f.upper)


def test_clairvoyant_examples():
    assert clairvoyant_finite(1, 1, 0) == 1
    assert clairvoyant_finite(0, 1, 1) == Fraction(1, 4)
    v = clairvoyant_finite(1, 2, 12)
    assert v <= Fraction(clairvoyant_upper(Position(1, 2)))
    assert float(v) == pytest.approx(0.6537, abs=1e-4)


def test_clairvoyant_depth_limits():
    with pytest.raises(ValueError):
        clairvoyant_finite(0, 1, 23)
    with pytest.raises(ValueError):
        clairvoyant_finite(0, 0, 0)


def test_clairvoyant_root_lookahead():
    # one flip from the start: heads gives 1, tails gives 0
    assert clairvoyant_finite(0, 0, 1) == Fraction(1, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.data(), st.integers(0, 10))
def test_clairvoyant_monotone_in_depth(n, data, depth):
    a = data.draw(st.integers(0, n))
    assert clairvoyant_finite(a, n, depth) <= clairvoyant_finite(a, n, depth + 1)
