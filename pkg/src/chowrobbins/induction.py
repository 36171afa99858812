"""Backward induction over the truncated box ``{(a, n): n <= N, |2a - n| <= h}``.

Two rolling rows of lower/upper bounds are swept from the horizon ``n = N``
down to the root.  Rows with ``n <= record_limit`` are copied out together
with the continuation enclosure and the certified decision of each position.
"""

from __future__ import annotations

import enum
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numba
import numpy as np

from . import _engine
from .bounds import Enclosure, Position, clairvoyant_upper, trivial_lower
from .rounding import Direction, dir_avg

log = logging.getLogger(__name__)

__all__ = [
    "BoxConfig",
    "BoundRow",
    "Decision",
    "DecisionKind",
    "QueryAnswer",
    "SweepResult",
    "CheckpointError",
    "default_band",
    "seed_bounds",
    "horizon_row",
    "step_back",
    "classify",
    "sweep",
]

CHECKPOINT_FORMAT = "chowrobbins-checkpoint"
CHECKPOINT_VERSION = 1
CHECKPOINT_NAME = "sweep-checkpoint.npz"


def default_band(horizon: int) -> int:
    """floor(2 sqrt(N / pi)), the band where both error terms meet at the far corner."""
    # floor(sqrt(x)) == isqrt(floor(x)); 4N/pi is far from an integer for any N in use
    return max(1, min(horizon, math.isqrt(math.floor(4 * horizon / math.pi))))


@dataclass(frozen=True)
class BoxConfig:
    horizon: int
    band: int | None = None
    clip: bool = True
    """Intersect every upper bound with the closed-form bound of its position."""

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.band is None:
            object.__setattr__(self, "band", default_band(self.horizon))
        if not 1 <= self.band <= self.horizon:
            raise ValueError(f"band must lie in [1, horizon], got {self.band}")

    def in_band(self, p: Position) -> bool:
        return p.n <= self.horizon and abs(p.difference) <= self.band


class DecisionKind(enum.Enum):
    STOP = "STOP"
    CONTINUE = "CONTINUE"
    UNKNOWN = "UNKNOWN"


_KINDS = {
    _engine.STOP: DecisionKind.STOP,
    _engine.CONTINUE: DecisionKind.CONTINUE,
    _engine.UNKNOWN: DecisionKind.UNKNOWN,
}


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    continuation: Enclosure
    stop_payoff_num: int
    stop_payoff_den: int


@dataclass
class BoundRow:
    """Bounds for row ``n``: entry ``i`` is the position ``(lo + i, n)``."""

    n: int
    lo: int
    lower: np.ndarray
    upper: np.ndarray
    cont_lower: np.ndarray | None = None
    cont_upper: np.ndarray | None = None
    kinds: np.ndarray | None = None

    @property
    def hi(self) -> int:
        return self.lo + len(self.lower) - 1

    def __contains__(self, a: int) -> bool:
        return self.lo <= a <= self.hi

    def enclosure(self, a: int) -> Enclosure:
        i = a - self.lo
        return Enclosure(float(self.lower[i]), float(self.upper[i]))

    def continuation(self, a: int) -> Enclosure:
        i = a - self.lo
        return Enclosure(float(self.cont_lower[i]), float(self.cont_upper[i]))

    def decision(self, a: int) -> Decision:
        return Decision(_KINDS[int(self.kinds[a - self.lo])], self.continuation(a), a, self.n)

    def positions(self) -> Iterator[Position]:
        for a in range(self.lo, self.hi + 1):
            yield Position(a, self.n)


def seed_bounds(p: Position, cfg: BoxConfig | None = None) -> Enclosure:
    """Closed-form enclosure used at the horizon and outside the band."""
    return Enclosure(trivial_lower(p), clairvoyant_upper(p))


def _seeded_continuation(p: Position) -> Enclosure:
    tail = seed_bounds(Position(p.a, p.n + 1))
    head = seed_bounds(Position(p.a + 1, p.n + 1))
    return Enclosure(dir_avg(tail.lower, head.lower, Direction.DOWN),
                     dir_avg(tail.upper, head.upper, Direction.UP))


def classify(p: Position, continuation: Enclosure) -> Decision:
    """STOP / CONTINUE / UNKNOWN from a certified continuation enclosure.

    a/n is never rounded: the enclosure endpoints are multiplied by n with
    directed rounding and compared with the integer a.
    """
    code = _engine.classify_core(p.a, p.n, continuation.lower, continuation.upper)
    return Decision(_KINDS[int(code)], continuation, p.a, p.n)


def _row_size(n: int, h: int) -> int:
    return _engine.band_hi(n, h) - _engine.band_lo(n, h) + 1


def horizon_row(cfg: BoxConfig) -> BoundRow:
    N, h = cfg.horizon, cfg.band
    lower, upper = np.empty(h + 2), np.empty(h + 2)
    lo = _engine.fill_horizon(N, h, lower, upper)
    size = _row_size(N, h)
    return BoundRow(N, int(lo), lower[:size].copy(), upper[:size].copy())


def _padded(values: np.ndarray, h: int) -> np.ndarray:
    out = np.empty(h + 2)
    out[: len(values)] = values
    return out


def step_back(row_next: BoundRow, n: int, cfg: BoxConfig) -> BoundRow:
    """One application of the value recurrence: row ``n`` from row ``n + 1``."""
    if row_next.n != n + 1:
        raise ValueError(f"row_next holds n={row_next.n}, expected {n + 1}")
    h = cfg.band
    L1, U1 = _padded(row_next.lower, h), _padded(row_next.upper, h)
    L, U, CL, CU = (np.empty(h + 2) for _ in range(4))
    inv = _gap_table(h)
    lo, hi = _engine.step_row(n, h, row_next.lo, row_next.hi, L1, U1, L, U, CL, CU, inv, cfg.clip)
    return _finish_row(n, int(lo), int(hi) - int(lo) + 1, L, U, CL, CU)


def _finish_row(n, lo, size, L, U, CL, CU) -> BoundRow:
    kinds = np.empty(size, dtype=np.int8)
    _engine.classify_row(n, lo, CL, CU, kinds)
    return BoundRow(n, lo, L[:size].copy(), U[:size].copy(), CL[:size].copy(), CU[:size].copy(), kinds)


_GAP_TABLES: dict[int, np.ndarray] = {}


def _gap_table(h: int) -> np.ndarray:
    if h not in _GAP_TABLES:
        _GAP_TABLES[h] = _engine.inverse_gap_table(h)
    return _GAP_TABLES[h]


@dataclass(frozen=True)
class QueryAnswer:
    position: Position
    enclosure: Enclosure
    decision: Decision
    seed_only: bool


@dataclass
class SweepResult:
    config: BoxConfig
    record_limit: int
    rows: dict[int, BoundRow] = field(default_factory=dict)
    queries: dict[Position, QueryAnswer] = field(default_factory=dict)

    @property
    def root(self) -> Enclosure:
        return self.rows[0].enclosure(0)

    def is_recorded(self, p: Position) -> bool:
        return p.n in self.rows and p.a in self.rows[p.n]

    def answer(self, p: Position) -> QueryAnswer:
        if p in self.queries:
            return self.queries[p]
        if self.is_recorded(p):
            row = self.rows[p.n]
            return QueryAnswer(p, row.enclosure(p.a), row.decision(p.a), False)
        if p.n > self.record_limit and self.config.in_band(p):
            raise KeyError(f"{p} lies beyond the recorded rows (n <= {self.record_limit})")
        return QueryAnswer(p, seed_bounds(p), classify(p, _seeded_continuation(p)), True)

    def enclosure(self, p: Position) -> Enclosure:
        return self.answer(p).enclosure

    def kind(self, p: Position) -> DecisionKind:
        if self.is_recorded(p):
            row = self.rows[p.n]
            return _KINDS[int(row.kinds[p.a - row.lo])]
        return self.answer(p).decision.kind

    def decision(self, p: Position) -> Decision:
        return self.answer(p).decision

    def positions(self) -> Iterator[Position]:
        for n in sorted(self.rows):
            yield from self.rows[n].positions()


class CheckpointError(RuntimeError):
    pass


def _checkpoint_meta(cfg: BoxConfig) -> dict:
    return {"horizon": cfg.horizon, "band": cfg.band, "clip": int(cfg.clip)}


def write_checkpoint(path: Path, cfg: BoxConfig, n: int, lo: int, lower: np.ndarray, upper: np.ndarray) -> None:
    """Store row ``n`` atomically; the box config travels with the data."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(
            fh,
            format=np.array(CHECKPOINT_FORMAT),
            version=np.array(CHECKPOINT_VERSION),
            n=np.array(n),
            lo=np.array(lo),
            lower=lower,
            upper=upper,
            **{k: np.array(v) for k, v in _checkpoint_meta(cfg).items()},
        )
    os.replace(tmp, path)


def read_checkpoint(path: Path, cfg: BoxConfig) -> BoundRow:
    with np.load(path) as data:
        if str(data["format"]) != CHECKPOINT_FORMAT or int(data["version"]) != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint format")
        stored = {k: int(data[k]) for k in _checkpoint_meta(cfg)}
        if stored != _checkpoint_meta(cfg):
            raise CheckpointError(f"{path}: checkpoint was written for {stored}, not {_checkpoint_meta(cfg)}")
        return BoundRow(int(data["n"]), int(data["lo"]), data["lower"].copy(), data["upper"].copy())


def sweep(
    cfg: BoxConfig,
    queries: Iterable[Position] = (),
    record_limit: int | None = None,
    *,
    workers: int = 1,
    checkpoint_dir: str | Path | None = None,
    checkpoint_every: int = 1_000_000,
    progress: Callable[[int], None] | None = None,
) -> SweepResult:
    """Run the recurrence from ``n = N - 1`` down to the root.

    Every in-band position with ``n <= record_limit`` is recorded; queried
    positions are captured as the sweep passes their row.  Queries outside
    the box are answered from the closed-form seeds and flagged ``seed_only``.
    """
    queries = list(dict.fromkeys(queries))
    N, h = cfg.horizon, cfg.band
    if record_limit is None:
        record_limit = 0
    if not 0 <= record_limit <= N:
        raise ValueError(f"record_limit must lie in [0, {N}]")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if checkpoint_every < 1:
        raise ValueError("checkpoint_every must be >= 1")

    result = SweepResult(cfg, record_limit)
    pending: dict[int, list[Position]] = {}
    for q in queries:
        if cfg.in_band(q) and q.n > record_limit:
            pending.setdefault(q.n, []).append(q)
    stops = sorted(pending, reverse=True)

    L1, U1, L, U, CL, CU = _engine.new_buffers(h)
    inv = _gap_table(h)

    def capture(row: BoundRow) -> None:
        for q in pending.get(row.n, ()):
            result.queries[q] = QueryAnswer(q, row.enclosure(q.a), row.decision(q.a), False)

    ckpt = Path(checkpoint_dir) / CHECKPOINT_NAME if checkpoint_dir is not None else None
    start = None
    if ckpt is not None and ckpt.exists():
        row = read_checkpoint(ckpt, cfg)
        if row.n <= max([record_limit, *stops]):
            log.warning("ignoring checkpoint at n=%d: rows above it are still needed", row.n)
        else:
            L1[: len(row.lower)] = row.lower
            U1[: len(row.upper)] = row.upper
            lo1, start = row.lo, row.n
            log.info("resuming from checkpoint at n=%d", start)
    if start is None:
        lo1 = int(_engine.fill_horizon(N, h, L1, U1))
        start = N
        if N <= record_limit or N in pending:
            # continuation of horizon positions from their seeded children
            _engine.step_row(N, h, N + 2, -1, L1, U1, L, U, CL, CU, inv, False)
            row = _finish_row(N, lo1, _row_size(N, h), L1, U1, CL, CU)
            if N <= record_limit:
                result.rows[N] = row
            capture(row)

    threads = min(workers, numba.config.NUMBA_NUM_THREADS)

    def run(n_from, n_to, lo1, L1, U1, L, U):
        if workers > 1:
            numba.set_num_threads(threads)
            return _engine.run_rows_chunked(n_from, n_to, h, lo1, L1, U1, L, U, CL, CU, inv, cfg.clip, workers)
        return _engine.run_rows(n_from, n_to, h, lo1, L1, U1, L, U, CL, CU, inv, cfg.clip)

    # unrecorded part, in chunks ending at checkpoints and queried rows
    n = start - 1
    while n > record_limit:
        n_to = max(record_limit + 1, n - checkpoint_every + 1, *(m for m in stops if m <= n))
        lo1, L1, U1, L, U = run(n, n_to, lo1, L1, U1, L, U)
        lo1 = int(lo1)
        if n_to in pending:
            capture(_finish_row(n_to, lo1, _row_size(n_to, h), L1, U1, CL, CU))
        if ckpt is not None:
            size = _row_size(n_to, h)
            write_checkpoint(ckpt, cfg, n_to, lo1, L1[:size], U1[:size])
        if progress is not None:
            progress(n_to)
        n = n_to - 1

    for n in range(min(start - 1, record_limit), -1, -1):
        lo1, L1, U1, L, U = run(n, n, lo1, L1, U1, L, U)
        lo1 = int(lo1)
        result.rows[n] = _finish_row(n, lo1, _row_size(n, h), L1, U1, CL, CU)

    for q in queries:
        if q not in result.queries:
            result.queries[q] = result.answer(q)
    return result
