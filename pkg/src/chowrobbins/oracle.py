"""Independent checks for the floating-point engine.

Everything here is exact (``fractions.Fraction`` / Python integers) except the
Monte Carlo estimator, whose randomness is seeded and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np
from numba import njit

from .bounds import Enclosure, Position
from .induction import BoxConfig
from .rounding import next_up

__all__ = [
    "PI_UPPER_RATIONAL",
    "RequiredFlips",
    "MCEstimate",
    "required_flips",
    "lemma1_bound",
    "mc_exceed_probability",
    "exact_exceed_probability",
    "exact_small_solver",
    "clairvoyant_finite",
    "sqrt_upper",
]

# pi rounded up at the 50th decimal
PI_UPPER_RATIONAL = Fraction("3.14159265358979323846264338327950288419716939937511")

_SQRT_BITS = 80


def _as_fraction(p) -> Fraction:
    if isinstance(p, Rational):
        return Fraction(p)
    if isinstance(p, float):
        # read floats as the decimal literal the caller wrote
        return Fraction(repr(p))
    return Fraction(p)


@dataclass(frozen=True)
class RequiredFlips:
    k_star: int


@dataclass(frozen=True)
class MCEstimate:
    trials: int
    successes: int
    truncation_cap: int

    @property
    def estimate(self) -> Fraction:
        return Fraction(self.successes, self.trials)

    @property
    def stderr(self) -> float:
        p = self.successes / self.trials
        return math.sqrt(p * (1 - p) / self.trials)


def required_flips(a: int, n: int, p) -> RequiredFlips:
    """Largest k with (a + k - 1)/(n + k - 1) <= p.

    Even k - 1 straight heads leave the proportion at or below p, so at least
    k more flips are needed before it can strictly exceed p.
    """
    p = _as_fraction(p)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (max(Fraction(a, n), Fraction(1, 2)) < p < 1):
        raise ValueError(f"p={p} outside (max(a/n, 1/2), 1)")
    return RequiredFlips(math.floor(1 + (n * p - a) / (1 - p)))


def lemma1_bound(p, k: int) -> float:
    """(2p)^(-k), rounded up to a double."""
    p = _as_fraction(p)
    if k < 0:
        raise ValueError("k must be >= 0")
    if p < Fraction(1, 2):
        raise ValueError("p must be >= 1/2")
    exact = (1 / (2 * p)) ** k
    r = float(exact)
    if Fraction(r) < exact:
        r = float(next_up(r))
    return r


@njit(cache=True)
def _popcount(x):
    x = x - ((x >> 1) & 0x5555555555555555)
    x = (x & 0x3333333333333333) + ((x >> 2) & 0x3333333333333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F0F0F0F0F
    return (x * 0x0101010101010101) >> 56 & 0xFF


@njit(cache=True)
def _mc_kernel(a, n, p_num, p_den, trials, cap, seed):
    np.random.seed(seed)
    successes = 0
    for _ in range(trials):
        heads = a
        flips = n
        if n > 0 and heads * p_den > p_num * flips:
            successes += 1
            continue
        done = 0
        while done < cap:
            left = cap - done
            # not even straight heads until the cap would succeed
            if (heads + left) * p_den <= p_num * (flips + left):
                break
            m = min(62, left)
            bits = np.random.randint(0, 1 << 62)
            if m < 62:
                bits &= (1 << m) - 1
            # p > 1/2, so (heads + j)/(flips + j) grows with j: if even
            # m straight heads stay at or below p, skip the block
            if (heads + m) * p_den <= p_num * (flips + m):
                heads += _popcount(bits)
                flips += m
                done += m
                continue
            hit = False
            for _ in range(m):
                heads += bits & 1
                bits >>= 1
                flips += 1
                if heads * p_den > p_num * flips:
                    hit = True
                    break
            if hit:
                successes += 1
                break
            done += m
    return successes


def mc_exceed_probability(a: int, n: int, p, trials: int, cap: int, seed: int) -> MCEstimate:
    """Fraction of simulated continuations whose head proportion exceeds ``p``.

    The current position counts, so a position already above ``p`` succeeds
    immediately.  Walks are cut after ``cap`` flips, which can only lower the
    estimate.
    """
    p = _as_fraction(p)
    if trials < 1 or cap < 1:
        raise ValueError("trials and cap must be >= 1")
    if p <= Fraction(1, 2) or p >= 1:
        raise ValueError("p must lie in (1/2, 1)")
    successes = _mc_kernel(a, n, p.numerator, p.denominator, trials, cap, seed)
    return MCEstimate(trials, int(successes), cap)


def exact_exceed_probability(a: int, n: int, p, cap: int) -> Fraction:
    """Exact probability that the proportion exceeds ``p`` within ``cap`` flips.

    Absorbing-state recursion over the head count, with path counts kept as
    integers scaled by 2**cap.
    """
    p = _as_fraction(p)
    if n > 0 and Fraction(a, n) > p:
        return Fraction(1)
    alive = {a: 1}
    absorbed = 0
    for j in range(1, cap + 1):
        m = n + j
        nxt: dict[int, int] = {}
        for h, c in alive.items():
            nxt[h] = nxt.get(h, 0) + c
            nxt[h + 1] = nxt.get(h + 1, 0) + c
        alive = {}
        for h, c in nxt.items():
            if h * p.denominator > p.numerator * m:
                absorbed += c << (cap - j)
            else:
                alive[h] = c
    return Fraction(absorbed, 1 << cap)


def sqrt_upper(x: Fraction, bits: int = _SQRT_BITS) -> Fraction:
    """A dyadic rational >= sqrt(x), within 2**-bits of it."""
    scaled = x * (1 << (2 * bits))
    target = math.ceil(scaled)
    s = math.isqrt(target)
    if s * s < target:
        s += 1
    return Fraction(s, 1 << bits)


def _seed_lower(a: int, n: int) -> Fraction:
    return max(Fraction(a, n), Fraction(1, 2))


def _seed_upper(a: int, n: int) -> Fraction:
    base = max(Fraction(a, n), Fraction(1, 2))
    err = sqrt_upper(PI_UPPER_RATIONAL / n) / 4
    d = abs(2 * a - n)
    if d:
        err = min(err, Fraction(1, 2 * d))
    return min(base + err, Fraction(1))


def exact_small_solver(cfg: BoxConfig, record_limit: int | None = None) -> dict[Position, Enclosure]:
    """The banded backward induction carried out in exact rational arithmetic.

    Same box, seeds and update rule as the floating engine (including the
    ``clip`` option), with pi and the square root replaced by rational upper
    bounds.  Returns enclosures for every in-band position with n <= record_limit.
    """
    N, h = cfg.horizon, cfg.band
    if N > 2000:
        raise ValueError("exact solver is limited to horizons <= 2000")
    if record_limit is None:
        record_limit = N

    def band(n):
        return range(max(0, (n - h + 1) // 2), min(n, (n + h) // 2) + 1)

    def bounds(a, m, row):
        if a in row:
            return row[a]
        return _seed_lower(a, m), _seed_upper(a, m)

    row = {a: (_seed_lower(a, N), _seed_upper(a, N)) for a in band(N)}
    out: dict[Position, Enclosure] = {}
    if N <= record_limit:
        out.update({Position(a, N): Enclosure(*v) for a, v in row.items()})
    for n in range(N - 1, -1, -1):
        new = {}
        for a in band(n):
            tl, tu = bounds(a, n + 1, row)
            hl, hu = bounds(a + 1, n + 1, row)
            lo, up = (tl + hl) / 2, (tu + hu) / 2
            if n > 0:
                lo = max(lo, Fraction(a, n))
                up = max(up, Fraction(a, n))
                if cfg.clip:
                    up = min(up, _seed_upper(a, n))
            new[a] = (lo, up)
        row = new
        if n <= record_limit:
            out.update({Position(a, n): Enclosure(*v) for a, v in row.items()})
    return out


def clairvoyant_finite(a: int, n: int, depth: int) -> Fraction:
    """Expected best proportion over flips n..n+depth, by enumerating all paths.

    A lower bound on the clairvoyant value: the best over an unbounded future
    is at least the best over this window.
    """
    if not 0 <= depth <= 22:
        raise ValueError("depth must lie in [0, 22]")
    if n == 0 and depth == 0:
        raise ValueError("no proportion is defined at (0, 0) without lookahead")
    heads = np.array([a], dtype=np.int64)
    if n > 0:
        best_num = np.array([a], dtype=np.int64)
        best_den = np.array([n], dtype=np.int64)
    else:
        best_num = np.array([0], dtype=np.int64)
        best_den = np.array([1], dtype=np.int64)
    for j in range(1, depth + 1):
        m = n + j
        heads = np.concatenate([heads, heads + 1])
        best_num = np.concatenate([best_num, best_num])
        best_den = np.concatenate([best_den, best_den])
        better = heads * best_den > best_num * m
        best_num = np.where(better, heads, best_num)
        best_den = np.where(better, m, best_den)
    pairs, counts = np.unique(np.stack([best_num, best_den]), axis=1, return_counts=True)
    total = sum(Fraction(int(c) * int(num), int(den)) for (num, den), c in zip(pairs.T, counts))
    return total / (1 << depth)
