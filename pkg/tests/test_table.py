import csv
import io
import json

import pytest

from chowrobbins.bounds import Position
from chowrobbins.induction import BoxConfig, DecisionKind, sweep
from chowrobbins.table import (
    build_opening_table,
    monotone_consistency_check,
    stop_threshold,
    table_to_csv,
    table_to_json,
)

S, C, U = DecisionKind.STOP, DecisionKind.CONTINUE, DecisionKind.UNKNOWN


@pytest.fixture(scope="module")
def table_1e5(sweep_1e5):
    return build_opening_table(sweep_1e5, 1000)


def test_first_rows(table_1e5):
    r1, r2, r3 = table_1e5[:3]
    assert (r1.last_stop, r1.first_continue, r1.unresolved) == (Position(1, 1), Position(2, 3), [])
    assert (r2.last_stop, r2.first_continue) == (Position(5, 8), Position(6, 10))
    assert (r3.last_stop, r3.first_continue) == (Position(9, 15), Position(10, 17))


def test_rows_stay_on_their_diagonal(table_1e5):
    for r in table_1e5:
        for p in [r.last_stop, r.first_continue, *r.unresolved]:
            if p is not None:
                assert p.difference == r.difference and p.n <= 1000


def test_columns_bracket_the_unknowns(table_1e5):
    for r in table_1e5:
        if r.last_stop and r.first_continue:
            assert r.last_stop.n < r.first_continue.n
            assert all(r.last_stop.n < p.n < r.first_continue.n for p in r.unresolved)


def test_table_requires_recorded_rows():
    res = sweep(BoxConfig(2000), record_limit=100)
    with pytest.raises(ValueError):
        build_opening_table(res, 1000)


def test_small_horizon_is_weaker_but_consistent(sweep_1e3):
    rows = build_opening_table(sweep_1e3, 1000)
    assert sum(len(r.unresolved) for r in rows) > 100
    assert monotone_consistency_check(sweep_1e3).ok


def test_stop_threshold(sweep_1e5):
    assert stop_threshold(sweep_1e5, 8) == 2
    assert stop_threshold(sweep_1e5, 1) == 1
    assert stop_threshold(sweep_1e5, 0) is None


def test_monotone_check_on_mappings():
    good = {Position(16, 28): S, Position(17, 30): C}
    assert monotone_consistency_check(good).ok
    bad = {Position(16, 28): C, Position(17, 30): S}
    rep = monotone_consistency_check(bad)
    assert not rep.ok
    assert rep.violations == [(Position(16, 28), Position(17, 30))]
    unknown = {Position(a, n): U for n in range(1, 20) for a in range(n + 1)}
    rep = monotone_consistency_check(unknown)
    assert rep.ok and rep.checked == len(unknown)


def test_monotone_check_agrees_on_sweeps(sweep_1e3):
    kinds = {p: sweep_1e3.kind(p) for p in sweep_1e3.positions()}
    a, b = monotone_consistency_check(sweep_1e3), monotone_consistency_check(kinds)
    assert a.checked == b.checked and a.violations == b.violations


def test_csv_and_json(table_1e5):
    text = table_to_csv(table_1e5[:12])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["difference", "last_stop_heads", "last_stop_tails",
                             "first_continue_heads", "first_continue_tails", "unresolved"]
    assert rows[0]["last_stop_heads"] == "1" and rows[0]["first_continue_tails"] == "1"
    data = json.loads(table_to_json(table_1e5[:12]))
    assert data[0] == {"difference": 1, "last_stop_heads": 1, "last_stop_tails": 0,
                       "first_continue_heads": 2, "first_continue_tails": 1, "unresolved": []}
    for row, d in zip(table_1e5, data):
        assert d["unresolved"] == [[p.a, p.tails] for p in row.unresolved]
