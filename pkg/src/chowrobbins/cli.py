"""Command-line interface: ``chowrobbins {solve,table,root,verify}``.

Exit status is 0 on success, 1 when a verification check fails and 2 for
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import re
import sys
import time
from decimal import ROUND_CEILING, ROUND_FLOOR, Context, Decimal
from pathlib import Path
from typing import Sequence

from .bounds import Position
from .induction import BoxConfig, CheckpointError, QueryAnswer, SweepResult, sweep
from .table import build_opening_table, monotone_consistency_check, table_to_csv, table_to_json
from .verify import SUITES, run_suite

log = logging.getLogger("chowrobbins")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

WORKERS_ENV = "CHOWROBBINS_WORKERS"

_DIGITS = 14
_FLOOR = Context(prec=_DIGITS, rounding=ROUND_FLOOR)
_CEIL = Context(prec=_DIGITS, rounding=ROUND_CEILING)


class UsageError(Exception):
    pass


def fmt_lower(x: float) -> str:
    """``x`` rounded down to 14 significant digits, so it is still a lower bound."""
    return str(_FLOOR.plus(Decimal(x)))


def fmt_upper(x: float) -> str:
    return str(_CEIL.plus(Decimal(x)))


_SCORE = re.compile(r"^(\d+)\s*-\s*(\d+)$")
_PAIR = re.compile(r"^(?:\(\s*(\d+)\s*,\s*(\d+)\s*\)|(\d+)\s*,\s*(\d+))$")


def parse_position(text: str) -> Position:
    """``"5-3"`` is 5 heads and 3 tails; ``"5,8"`` or ``"(5,8)"`` is 5 heads in 8 flips."""
    s = text.strip()
    if m := _SCORE.match(s):
        return Position.from_score(int(m[1]), int(m[2]))
    if m := _PAIR.match(s):
        a, n = (int(g) for g in m.groups() if g is not None)
        if a > n:
            raise ValueError(f"{s!r}: {a} heads cannot exceed {n} flips")
        return Position(a, n)
    raise ValueError(f"{s!r} is neither heads-tails nor (a,n)")


def _split_positions(text: str) -> list[str]:
    # commas belong to "(a,n)", so separate items by whitespace or ';'
    items = re.split(r"[;\s]+(?![^()]*\))", text.strip())
    return [t for t in items if t]


def read_positions_file(path: Path) -> list[Position]:
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read positions file: {e}") from None
    out, errors = [], []
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0]
        for item in _split_positions(body):
            try:
                out.append(parse_position(item))
            except ValueError as e:
                errors.append(f"{path}:{lineno}: {e}")
    if errors:
        raise UsageError("malformed positions file\n" + "\n".join(errors))
    return out


def gather_positions(args) -> list[Position]:
    out = []
    for text in args.positions or ():
        for item in _split_positions(text):
            try:
                out.append(parse_position(item))
            except ValueError as e:
                raise UsageError(f"--positions: {e}") from None
    if args.positions_file:
        out += read_positions_file(Path(args.positions_file))
    return list(dict.fromkeys(out))


# -- configuration --------------------------------------------------------------

def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonnegative(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {v}")
    return v


def box_config(args) -> BoxConfig:
    if args.band is not None and args.band > args.horizon:
        raise UsageError(f"--band {args.band} exceeds --horizon {args.horizon}")
    return BoxConfig(args.horizon, args.band, clip=not args.no_clip)


def run_sweep(args, cfg: BoxConfig, queries=(), record_limit: int = 0) -> SweepResult:
    if record_limit > cfg.horizon:
        raise UsageError(f"record limit {record_limit} exceeds --horizon {cfg.horizon}")
    last = [time.monotonic()]

    def progress(n: int) -> None:
        now = time.monotonic()
        log.info("row %d reached (%.1fs)", n, now - last[0])
        last[0] = now

    log.info("sweeping N=%d band=%d clip=%s", cfg.horizon, cfg.band, cfg.clip)
    try:
        return sweep(cfg, queries, record_limit, workers=args.workers,
                     checkpoint_dir=args.checkpoint_dir, checkpoint_every=args.checkpoint_every,
                     progress=progress)
    except CheckpointError as e:
        raise UsageError(str(e)) from None


def emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _header(cfg: BoxConfig) -> str:
    return f"# horizon={cfg.horizon} band={cfg.band} clip={'on' if cfg.clip else 'off'}\n"


# -- commands -------------------------------------------------------------------

_SOLVE_FIELDS = ["position", "heads", "flips", "lower", "upper", "decision",
                 "continue_lower", "continue_upper", "stop_payoff", "seed_only"]


def _solve_record(q: QueryAnswer) -> dict:
    p, d = q.position, q.decision
    return {
        "position": str(p),
        "heads": p.a,
        "flips": p.n,
        "lower": fmt_lower(q.enclosure.lower),
        "upper": fmt_upper(q.enclosure.upper),
        "decision": d.kind.value,
        "continue_lower": fmt_lower(d.continuation.lower),
        "continue_upper": fmt_upper(d.continuation.upper),
        "stop_payoff": f"{d.stop_payoff_num}/{d.stop_payoff_den}" if p.n else "",
        "seed_only": q.seed_only,
    }


def cmd_solve(args) -> int:
    cfg = box_config(args)
    positions = gather_positions(args)
    if not positions:
        raise UsageError("no positions given (use --positions or --positions-file)")
    res = run_sweep(args, cfg, positions, args.record_limit)
    records = [_solve_record(res.answer(p)) for p in positions]
    if args.format == "json":
        text = json.dumps({"horizon": cfg.horizon, "band": cfg.band, "clip": cfg.clip,
                           "positions": records}, indent=1) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, _SOLVE_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(records)
        text = buf.getvalue()
    else:
        lines = [_header(cfg).rstrip()]
        for r in records:
            seed = "  (outside the box: closed-form bounds)" if r["seed_only"] else ""
            stop = f"  stop {r['stop_payoff']}" if r["stop_payoff"] else ""
            lines.append(
                f"{r['position']:>9} ({r['heads']},{r['flips']})  {r['decision']:<8}"
                f"  V in [{r['lower']}, {r['upper']}]"
                f"  continue in [{r['continue_lower']}, {r['continue_upper']}]{stop}{seed}"
            )
        text = "\n".join(lines) + "\n"
    emit(args, text)
    return EXIT_OK


def cmd_table(args) -> int:
    cfg = box_config(args)
    if args.max_flips > cfg.horizon:
        raise UsageError(f"--max-flips {args.max_flips} exceeds --horizon {cfg.horizon}")
    res = run_sweep(args, cfg, record_limit=args.max_flips)
    rows = build_opening_table(res, args.max_flips)
    report = monotone_consistency_check(res)
    if args.format == "json":
        text = table_to_json(rows) + "\n"
    elif args.format == "csv":
        text = table_to_csv(rows)
    else:
        out = [_header(cfg).rstrip(), f"{'diff':>4}  {'stop with':>10}  {'go with':>10}  unresolved"]
        # rows from `tail` on are STOP everywhere up to max_flips
        tail = len(rows)
        while tail > 0 and rows[tail - 1].first_continue is None and not rows[tail - 1].unresolved:
            tail -= 1
        for r in rows[:tail]:
            ls = str(r.last_stop) if r.last_stop else "-"
            fc = str(r.first_continue) if r.first_continue else "-"
            out.append(f"{r.difference:>4}  {ls:>10}  {fc:>10}  {' '.join(map(str, r.unresolved))}".rstrip())
        if tail < len(rows):
            out.append(f"{'>=' + str(tail + 1):>4}  {'stop':>10}")
        text = "\n".join(out) + "\n"
    emit(args, text)
    if not report.ok:
        for cont, stop in report.violations:
            log.error("monotone check: CONTINUE at %s precedes STOP at %s", cont, stop)
        return EXIT_FAILED
    return EXIT_OK


def cmd_root(args) -> int:
    cfg = box_config(args)
    res = run_sweep(args, cfg)
    e = res.root
    lo, hi = fmt_lower(e.lower), fmt_upper(e.upper)
    if args.format == "json":
        text = json.dumps({"horizon": cfg.horizon, "band": cfg.band, "clip": cfg.clip,
                           "lower": lo, "upper": hi,
                           "lower_exact": e.lower.hex(), "upper_exact": e.upper.hex()}, indent=1) + "\n"
    elif args.format == "csv":
        text = f"horizon,band,clip,lower,upper\n{cfg.horizon},{cfg.band},{cfg.clip},{lo},{hi}\n"
    else:
        text = _header(cfg) + f"{lo} <= V(0,0) <= {hi}\n"
    emit(args, text)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(SUITES) if not args.suite or "all" in args.suite else list(dict.fromkeys(args.suite))
    options = {
        "rounding": {"samples": args.samples, "seed": args.seed},
        "sandwich": {"horizons": args.horizons or (1_000, 10_000), "clip": not args.no_clip},
        "monotonicity": {"horizons": args.horizons or (1_000, 10_000, 100_000),
                         "samples": 100, "seed": args.seed, "clip": not args.no_clip},
        "oracle": {"horizon": args.horizon, "clip": not args.no_clip},
        "lemma1": {"trials": args.trials, "cap": args.cap, "seed": args.seed, "max_n": args.max_n},
        "clairvoyant": {"max_n": 12, "depth": args.depth},
        "monotone": {"horizons": args.horizons or (1_000, 10_000, 100_000), "clip": not args.no_clip},
    }
    if args.horizon > 2000:
        raise UsageError("the oracle suite needs --horizon <= 2000")
    lines, ok = [], True
    for name in names:
        t = time.monotonic()
        rep = run_suite(name, **options[name])
        log.info("%s finished in %.1fs", name, time.monotonic() - t)
        lines += rep.lines()
        ok &= rep.ok
    lines.append("all suites passed" if ok else "verification FAILED")
    emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_FAILED


# -- parser ---------------------------------------------------------------------

def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        return _positive(raw)
    except argparse.ArgumentTypeError:
        raise UsageError(f"{WORKERS_ENV}={raw!r} is not a positive integer") from None


def build_parser(default_workers: int = 1) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chowrobbins",
        description="Certified bounds for the Chow-Robbins coin-flip stopping game.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, horizon: int, formats=("text", "csv", "json")):
        p.add_argument("--horizon", "-N", type=_positive, default=horizon, help=f"last row of the box (default {horizon})")
        p.add_argument("--band", type=_positive, default=None,
                       help="band half-width |heads - tails| <= band (default floor(2 sqrt(N/pi)))")
        p.add_argument("--no-clip", action="store_true",
                       help="do not intersect upper bounds with the closed-form bound")
        p.add_argument("--workers", type=_positive, default=default_workers,
                       help=f"parallel workers for the sweep (default 1, or ${WORKERS_ENV})")
        p.add_argument("--checkpoint-dir", help="directory for resumable sweep checkpoints")
        p.add_argument("--checkpoint-every", type=_positive, default=1_000_000, metavar="ROWS")
        p.add_argument("--format", choices=formats, default="text")
        p.add_argument("--output", "-o", help="write to this file instead of stdout")

    p = sub.add_parser("solve", help="enclosures and decisions for given positions")
    common(p, 1_000_000)
    p.add_argument("--positions", "-p", action="append",
                   help='positions as "heads-tails" or "a,n", separated by spaces or ";"')
    p.add_argument("--positions-file", help="file with one or more positions per line; # starts a comment")
    p.add_argument("--record-limit", type=_nonnegative, default=0,
                   help="also keep every row with n <= this in memory (default 0)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("table", help="stop/continue thresholds per difference")
    common(p, 10_000_000)
    p.add_argument("--max-flips", type=_positive, default=1000)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("root", help="enclosure of the value at the start of the game")
    common(p, 10_000_000)
    p.set_defaults(func=cmd_root)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", action="append", choices=[*SUITES, "all"],
                   help="suite to run, may be repeated (default all)")
    p.add_argument("--horizon", "-N", type=_positive, default=1_000, help="horizon for the oracle suite")
    p.add_argument("--horizons", type=_positive, nargs="+", help="horizons for the sweep suites")
    p.add_argument("--no-clip", action="store_true")
    p.add_argument("--trials", type=_positive, default=100_000, help="Monte Carlo trials per cell")
    p.add_argument("--cap", type=_positive, default=1_000, help="flips simulated per Monte Carlo walk")
    p.add_argument("--max-n", type=_positive, default=50, help="largest n in the Monte Carlo grid")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--depth", type=int, default=16, choices=range(0, 23), metavar="0..22",
                   help="lookahead for clairvoyant enumeration")
    p.add_argument("--samples", type=_positive, default=100_000, help="operand pairs for the rounding suite")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser(_default_workers())
    except UsageError as e:
        print(f"chowrobbins: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except BrokenPipeError:
        # output piped into e.g. head; not an error
        sys.stderr.close()
        return EXIT_OK
    except (UsageError, ValueError) as e:
        print(f"chowrobbins: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
