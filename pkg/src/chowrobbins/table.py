"""Opening theory: per-difference stop/continue thresholds."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _engine
from .bounds import Position
from .induction import DecisionKind, SweepResult

__all__ = [
    "ThresholdRow",
    "MonotoneReport",
    "build_opening_table",
    "monotone_consistency_check",
    "stop_threshold",
    "table_to_csv",
    "table_to_json",
]


@dataclass
class ThresholdRow:
    difference: int
    last_stop: Position | None
    first_continue: Position | None
    unresolved: list[Position] = field(default_factory=list)

    def as_dict(self) -> dict:
        def pair(p):
            return (None, None) if p is None else (p.a, p.tails)

        ls, fc = pair(self.last_stop), pair(self.first_continue)
        return {
            "difference": self.difference,
            "last_stop_heads": ls[0],
            "last_stop_tails": ls[1],
            "first_continue_heads": fc[0],
            "first_continue_tails": fc[1],
            "unresolved": [[p.a, p.tails] for p in self.unresolved],
        }


def _diagonal_kinds(sweep: SweepResult, d: int, max_flips: int) -> list[tuple[Position, DecisionKind]]:
    out = []
    for n in range(d, max_flips + 1, 2):
        p = Position((n + d) // 2, n)
        out.append((p, sweep.kind(p)))
    return out


def build_opening_table(sweep: SweepResult, max_flips: int = 1000) -> list[ThresholdRow]:
    """One row per positive difference d = heads - tails, for n <= max_flips.

    ``last_stop`` is the STOP position with the most flips, ``first_continue``
    the earliest position from which every later one on the diagonal is
    CONTINUE.  All UNKNOWN positions on the diagonal are listed.
    """
    if max_flips > sweep.record_limit:
        raise ValueError(f"sweep recorded n <= {sweep.record_limit}, table needs {max_flips}")
    rows = []
    for d in range(1, max_flips + 1):
        diag = _diagonal_kinds(sweep, d, max_flips)
        stops = [p for p, k in diag if k is DecisionKind.STOP]
        first_continue = None
        for p, k in reversed(diag):
            if k is not DecisionKind.CONTINUE:
                break
            first_continue = p
        rows.append(ThresholdRow(
            difference=d,
            last_stop=stops[-1] if stops else None,
            first_continue=first_continue,
            unresolved=[p for p, k in diag if k is DecisionKind.UNKNOWN],
        ))
    return rows


def stop_threshold(sweep: SweepResult, n: int) -> int | None:
    """Smallest positive difference at which stopping is certified after ``n`` flips."""
    for d in range(n % 2 or 2, n + 1, 2):
        if sweep.decision(Position((n + d) // 2, n)).kind is DecisionKind.STOP:
            return d
    return None


@dataclass
class MonotoneReport:
    checked: int
    violations: list[tuple[Position, Position]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def monotone_consistency_check(source: SweepResult | Mapping[Position, DecisionKind]) -> MonotoneReport:
    """Along each difference, no certified CONTINUE may precede a certified STOP.

    Each violation is reported as (earliest CONTINUE, latest STOP) on the
    offending diagonal.
    """
    first_cont: dict[int, Position] = {}
    last_stop: dict[int, Position] = {}
    checked = 0

    def note(p: Position, kind: int) -> None:
        d = p.difference
        if kind == _engine.CONTINUE:
            if d not in first_cont or p.n < first_cont[d].n:
                first_cont[d] = p
        elif kind == _engine.STOP:
            if d not in last_stop or p.n > last_stop[d].n:
                last_stop[d] = p

    codes = {DecisionKind.STOP: _engine.STOP, DecisionKind.CONTINUE: _engine.CONTINUE,
             DecisionKind.UNKNOWN: _engine.UNKNOWN}
    if isinstance(source, SweepResult):
        top = max(source.rows, default=0)
        off = top
        fc = np.full(2 * top + 1, np.iinfo(np.int64).max)
        ls = np.full(2 * top + 1, -1)
        for n, row in source.rows.items():
            d = 2 * np.arange(row.lo, row.hi + 1) - n + off
            checked += len(d)
            c = d[row.kinds == _engine.CONTINUE]
            fc[c] = np.minimum(fc[c], n)
            s = d[row.kinds == _engine.STOP]
            ls[s] = np.maximum(ls[s], n)
        for i in np.nonzero(fc < np.iinfo(np.int64).max)[0]:
            d, n = int(i) - off, int(fc[i])
            first_cont[d] = Position((n + d) // 2, n)
        for i in np.nonzero(ls >= 0)[0]:
            d, n = int(i) - off, int(ls[i])
            last_stop[d] = Position((n + d) // 2, n)
    else:
        for p, k in source.items():
            checked += 1
            note(p, codes[k])

    violations = [
        (first_cont[d], last_stop[d])
        for d in sorted(set(first_cont) & set(last_stop))
        if first_cont[d].n < last_stop[d].n
    ]
    return MonotoneReport(checked, violations)


def table_to_csv(rows: list[ThresholdRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["difference", "last_stop_heads", "last_stop_tails",
                "first_continue_heads", "first_continue_tails", "unresolved"])
    for r in rows:
        d = r.as_dict()
        w.writerow([
            d["difference"],
            "" if d["last_stop_heads"] is None else d["last_stop_heads"],
            "" if d["last_stop_tails"] is None else d["last_stop_tails"],
            "" if d["first_continue_heads"] is None else d["first_continue_heads"],
            "" if d["first_continue_tails"] is None else d["first_continue_tails"],
            ";".join(f"{h}-{t}" for h, t in d["unresolved"]),
        ])
    return buf.getvalue()


def table_to_json(rows: list[ThresholdRow]) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=1)
