"""Certified bounds for the Chow-Robbins coin-flip stopping game.

The value ``V(a, n)`` of holding ``a`` heads after ``n`` flips is enclosed by
backward induction over a truncated box, with closed-form bounds at its edge
and directed rounding throughout, so every printed interval is a certificate.
"""

from .bounds import Enclosure, Position, clairvoyant_upper, trivial_lower
from .induction import (
    BoxConfig,
    Decision,
    DecisionKind,
    QueryAnswer,
    SweepResult,
    classify,
    default_band,
    seed_bounds,
    step_back,
    sweep,
)
from .table import build_opening_table, monotone_consistency_check

__version__ = "1.0.0"

__all__ = [
    "BoxConfig",
    "Decision",
    "DecisionKind",
    "Enclosure",
    "Position",
    "QueryAnswer",
    "SweepResult",
    "build_opening_table",
    "clairvoyant_upper",
    "classify",
    "default_band",
    "monotone_consistency_check",
    "seed_bounds",
    "step_back",
    "sweep",
    "trivial_lower",
]
