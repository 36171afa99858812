"""Closed-form certified bounds on the game value.

``trivial_lower`` is the payoff guaranteed by stopping now or waiting for the
walk to return to an even score.  ``clairvoyant_upper`` bounds the expected
payoff of a player who knows every future flip, which dominates the optimal
value.  Both are evaluated with directed rounding so the floating result stays
on the safe side of the real bound.
"""

from __future__ import annotations

from dataclasses import dataclass

from numba import njit

from .rounding import DOWN, PI_UP, UP, add_core, div_core, sqrt_core

__all__ = ["Position", "Enclosure", "trivial_lower", "clairvoyant_upper"]


@dataclass(frozen=True, order=True)
class Position:
    """``a`` heads out of ``n`` flips."""

    a: int
    n: int

    def __post_init__(self) -> None:
        if not (0 <= self.a <= self.n):
            raise ValueError(f"invalid position: {self.a} heads out of {self.n} flips")

    @property
    def tails(self) -> int:
        return self.n - self.a

    @property
    def difference(self) -> int:
        return 2 * self.a - self.n

    @classmethod
    def from_score(cls, heads: int, tails: int) -> "Position":
        return cls(heads, heads + tails)

    def __str__(self) -> str:
        return f"{self.a}-{self.tails}"


@dataclass(frozen=True)
class Enclosure:
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not self.lower <= self.upper:
            raise ValueError(f"empty enclosure [{self.lower!r}, {self.upper!r}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper


@njit(cache=True)
def trivial_lower_core(a, n):
    return max(div_core(float(a), float(n), DOWN), 0.5)


@njit(cache=True)
def clairvoyant_upper_core(a, n):
    fn = float(n)
    base = max(div_core(float(a), fn, UP), 0.5)
    # 0.25 * sqrt(pi / n); scaling by 0.25 is exact
    err = 0.25 * sqrt_core(div_core(PI_UP, fn, UP), UP)
    d = abs(2 * a - n)
    if d > 0:
        err = min(err, div_core(1.0, 2.0 * d, UP))
    return min(add_core(base, err, UP), 1.0)


def _check_position(p: Position) -> None:
    if p.n < 1:
        raise ValueError("stop payoff a/n is undefined at n = 0")


def trivial_lower(p: Position) -> float:
    """max(a/n, 1/2), rounded down."""
    _check_position(p)
    return float(trivial_lower_core(p.a, p.n))


def clairvoyant_upper(p: Position) -> float:
    """Upper bound on the clairvoyant value, clamped to 1 and rounded up.

    The error term is the smaller of ``sqrt(pi/n)/4`` and ``1/(2|2a-n|)``;
    on the midline only the square-root branch applies.
    """
    _check_position(p)
    return float(clairvoyant_upper_core(p.a, p.n))
