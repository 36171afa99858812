"""Verification suites that check the engine against independent oracles.

Each suite returns a :class:`SuiteReport`; a suite passes when it records no
failures.  Sweeps are cached per configuration so that several suites can
share one run.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .bounds import Position, clairvoyant_upper, clairvoyant_upper_core, trivial_lower_core
from .induction import BoxConfig, SweepResult, sweep
from .oracle import (
    clairvoyant_finite,
    exact_small_solver,
    lemma1_bound,
    mc_exceed_probability,
    required_flips,
)
from .rounding import DOWN, UP, dir_add, dir_avg, dir_div, dir_mul, dir_sqrt, next_up
from .table import monotone_consistency_check

__all__ = ["SuiteReport", "SUITES", "run_suite", "cached_sweep", "LEMMA1_PROBABILITIES"]

LEMMA1_PROBABILITIES = tuple(Fraction(k, 100) for k in range(55, 100, 5))

_MAX_FAILURES = 20


@dataclass
class SuiteReport:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, msg: str) -> None:
        self.failures.append(msg)

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{self.name}: {status} ({self.checked} checks, {len(self.failures)} failures)"

    def lines(self) -> list[str]:
        out = [self.summary()]
        out += [f"  note: {n}" for n in self.notes]
        out += [f"  fail: {f}" for f in self.failures[:_MAX_FAILURES]]
        if len(self.failures) > _MAX_FAILURES:
            out.append(f"  ... {len(self.failures) - _MAX_FAILURES} more")
        return out


@functools.lru_cache(maxsize=8)
def cached_sweep(horizon: int, band: int | None = None, clip: bool = True,
                 record_limit: int | None = None) -> SweepResult:
    cfg = BoxConfig(horizon, band, clip)
    return sweep(cfg, record_limit=horizon if record_limit is None else record_limit)


# -- directed rounding ---------------------------------------------------------

def _operands(rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Operand pairs: unit range, wide exponents and near-equal values in [1/2, 1]."""
    k = size // 3
    x = np.empty(size)
    y = np.empty(size)
    x[:k] = rng.random(k)
    y[:k] = rng.random(k)
    w = size - 2 * k
    x[k:k + w] = rng.random(w) * 2.0 ** rng.integers(-300, 300, w)
    y[k:k + w] = rng.random(w) * 2.0 ** rng.integers(-300, 300, w)
    x[k + w:] = 0.5 + rng.random(k) / 2
    y[k + w:] = x[k + w:] * (1 + (rng.random(k) - 0.5) * 2.0 ** -40)
    # nonzero, with random signs except for the near-equal block
    x[x == 0] = 1.0
    y[y == 0] = 1.0
    flip = rng.random((2, k + w)) < 0.25
    x[:k + w][flip[0]] *= -1
    y[:k + w][flip[1]] *= -1
    return x, y


def _within_two_ulp(lo: float, hi: float) -> bool:
    return hi <= next_up(next_up(lo))


def suite_rounding(samples: int = 100_000, seed: int = 0) -> SuiteReport:
    """Directed results bracket the exact rational result, at most 2 ulp apart."""
    rep = SuiteReport("rounding")
    rng = np.random.default_rng(seed)
    xs, ys = _operands(rng, samples)
    ops: list[tuple[str, Callable, Callable]] = [
        ("add", dir_add, lambda a, b: a + b),
        ("mul", dir_mul, lambda a, b: a * b),
        ("div", dir_div, lambda a, b: a / b),
        ("avg", dir_avg, lambda a, b: (a + b) / 2),
    ]
    for x, y in zip(xs.tolist(), ys.tolist()):
        fx, fy = Fraction(x), Fraction(y)
        for name, op, exact in ops:
            lo, hi = op(x, y, DOWN), op(x, y, UP)
            e = exact(fx, fy)
            rep.checked += 1
            if not Fraction(lo) <= e <= Fraction(hi):
                rep.fail(f"{name}({x!r}, {y!r}) -> [{lo!r}, {hi!r}] misses the exact value")
            elif not _within_two_ulp(lo, hi):
                rep.fail(f"{name}({x!r}, {y!r}) -> [{lo!r}, {hi!r}] wider than 2 ulp")
        ax = abs(x)
        lo, hi = dir_sqrt(ax, DOWN), dir_sqrt(ax, UP)
        rep.checked += 1
        fa = Fraction(ax)
        if not (Fraction(lo) ** 2 <= fa <= Fraction(hi) ** 2):
            rep.fail(f"sqrt({ax!r}) -> [{lo!r}, {hi!r}] misses the exact value")
        elif not _within_two_ulp(lo, hi):
            rep.fail(f"sqrt({ax!r}) -> [{lo!r}, {hi!r}] wider than 2 ulp")
    return rep


# -- sweeps ---------------------------------------------------------------------

@njit(cache=True)
def _sandwich_row(n, lo, lower, upper, bad):
    count = 0
    for i in range(lower.shape[0]):
        a = lo + i
        if lower[i] > upper[i]:
            bad[count] = a
            count += 1
        elif n == 0:
            if lower[i] < 0.5 or upper[i] > 1.0:
                bad[count] = a
                count += 1
        elif lower[i] < trivial_lower_core(a, n) or upper[i] > clairvoyant_upper_core(a, n):
            bad[count] = a
            count += 1
    return count


def suite_sandwich(horizons: Sequence[int] = (1_000, 10_000), clip: bool = True) -> SuiteReport:
    """Every recorded enclosure lies between the two closed-form bounds."""
    rep = SuiteReport("sandwich")
    for N in horizons:
        res = cached_sweep(N, clip=clip)
        for n, row in res.rows.items():
            bad = np.empty(len(row.lower), dtype=np.int64)
            k = _sandwich_row(n, row.lo, row.lower, row.upper, bad)
            rep.checked += len(row.lower)
            for a in bad[:k]:
                p = Position(int(a), n)
                rep.fail(f"N={N}: {p} enclosure {row.enclosure(p.a)} leaves the closed-form bounds")
    return rep


def suite_horizon_monotonicity(horizons: Sequence[int] = (1_000, 10_000, 100_000),
                               samples: int = 100, seed: int = 0, clip: bool = True) -> SuiteReport:
    """Enclosures of sampled positions shrink as the horizon grows."""
    rep = SuiteReport("monotonicity")
    horizons = sorted(horizons)
    smallest = BoxConfig(horizons[0], clip=clip)
    rng = np.random.default_rng(seed)
    picks: set[Position] = set()
    while len(picks) < samples:
        n = int(rng.integers(0, horizons[0] + 1))
        d = int(rng.integers(-smallest.band, smallest.band + 1))
        if (n + d) % 2 or abs(d) > n:
            continue
        picks.add(Position((n + d) // 2, n))
    qs = sorted(picks)
    runs = [sweep(BoxConfig(N, clip=clip), qs) for N in horizons]
    for p in qs:
        encs = [r.answer(p).enclosure for r in runs]
        for (n0, e0), (n1, e1) in zip(zip(horizons, encs), zip(horizons[1:], encs[1:])):
            rep.checked += 1
            if e1.lower < e0.lower or e1.upper > e0.upper:
                rep.fail(f"{p}: N={n0} {e0} vs N={n1} {e1}")
    return rep


def suite_oracle(horizon: int = 1_000, clip: bool = True) -> SuiteReport:
    """The floating enclosures contain those of the exact rational solver."""
    rep = SuiteReport("oracle")
    cfg = BoxConfig(horizon, clip=clip)
    exact = exact_small_solver(cfg)
    res = cached_sweep(horizon, clip=clip)
    for p, e in exact.items():
        f = res.enclosure(p)
        rep.checked += 1
        if not (Fraction(f.lower) <= e.lower and e.upper <= Fraction(f.upper)):
            rep.fail(f"{p}: float {f} does not contain [{float(e.lower)!r}, {float(e.upper)!r}]")
    return rep


def lemma1_grid(max_n: int = 50, probabilities: Sequence[Fraction] = LEMMA1_PROBABILITIES):
    for p in probabilities:
        for n in range(1, max_n + 1):
            for a in range(n + 1):
                if max(Fraction(a, n), Fraction(1, 2)) < p:
                    yield a, n, p


def suite_lemma1(trials: int = 100_000, cap: int = 1_000, seed: int = 42, max_n: int = 50,
                 sigmas: float = 3.0) -> SuiteReport:
    """Monte Carlo exceedance estimates stay below (2p)^-k plus statistical slack."""
    rep = SuiteReport("lemma1")
    worst, silent = -math.inf, 0
    for i, (a, n, p) in enumerate(lemma1_grid(max_n)):
        k = required_flips(a, n, p).k_star
        bound = lemma1_bound(p, k)
        est = mc_exceed_probability(a, n, p, trials, cap, seed + i)
        rep.checked += 1
        excess = float(est.estimate) - bound
        if est.successes == 0:
            silent += 1
        else:
            worst = max(worst, excess / est.stderr)
        if excess > sigmas * est.stderr:
            rep.fail(f"({a},{n}) p={p}: estimate {float(est.estimate):.5f} > bound {bound:.5f} "
                     f"+ {sigmas} x {est.stderr:.5f}")
    rep.notes.append(f"{trials} trials per cell, walks cut after {cap} flips; "
                     f"{silent} cells saw no success; "
                     f"largest (estimate - bound) / stderr elsewhere = {worst:.2f}")
    return rep


def suite_clairvoyant(max_n: int = 12, depth: int = 16) -> SuiteReport:
    """Finite-window clairvoyant values stay below the closed-form upper bound."""
    rep = SuiteReport("clairvoyant")
    depths = sorted({0, depth // 2, depth})
    for n in range(1, max_n + 1):
        for a in range(n + 1):
            p = Position(a, n)
            bound = Fraction(clairvoyant_upper(p))
            prev = None
            for dp in depths:
                v = clairvoyant_finite(a, n, dp)
                rep.checked += 1
                if v > bound:
                    rep.fail(f"{p} depth {dp}: {float(v)!r} > {float(bound)!r}")
                if prev is not None and v < prev:
                    rep.fail(f"{p}: value decreases with depth at {dp}")
                prev = v
    return rep


def suite_monotone(horizons: Sequence[int] = (1_000, 10_000, 100_000), clip: bool = True) -> SuiteReport:
    """Along each difference, certified STOP never follows certified CONTINUE."""
    rep = SuiteReport("monotone")
    for N in horizons:
        res = cached_sweep(N, clip=clip, record_limit=min(N, 1_000))
        mr = monotone_consistency_check(res)
        rep.checked += mr.checked
        for cont, stop in mr.violations:
            rep.fail(f"N={N}: CONTINUE at {cont} before STOP at {stop}")
    return rep


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "rounding": suite_rounding,
    "sandwich": suite_sandwich,
    "monotonicity": suite_horizon_monotonicity,
    "oracle": suite_oracle,
    "lemma1": suite_lemma1,
    "clairvoyant": suite_clairvoyant,
    "monotone": suite_monotone,
}


def run_suite(name: str, **kwargs) -> SuiteReport:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return fn(**kwargs)
