"""Sweeps that compare the closed-form criteria with exhaustive searches.

Three tables are checked, identified on the wire as

* ``table1``: every element has a balanced k-factorisation,
* ``table2-scalar``: every element has a non-power one,
* ``table2-matrix``: every 2 x 2 Jordan cell aE + J has a commuting one.

Jordan cells are the decisive targets for the matrix table: they are cyclic,
so their commuting factorisations lie in the algebra they generate and the
subalgebra search is a complete oracle for them.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .fields import field_of_order, prime_powers
from .matrices import jordan_cell
from .scalar import decide_balanced, decide_nonpower, oracle_targets
from .search import decide_matrix, subalgebra_search

TABLES = ("table1", "table2-scalar", "table2-matrix")


@dataclass(frozen=True)
class Cell:
    table: str
    q: int
    k: int
    table_says: bool
    oracle_says: bool
    witness: str | None = None


@dataclass(frozen=True)
class DiscrepancyRecord:
    table: str
    q: int
    k: int
    witness: str | None
    table_says: bool
    oracle_says: bool

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DiscrepancyRecord":
        rec = cls(str(d["table"]), int(d["q"]), int(d["k"]), d.get("witness"),
                  bool(d["table_says"]), bool(d["oracle_says"]))
        if rec.table not in TABLES:
            raise ValueError(f"unknown table {rec.table!r}")
        if rec.table_says == rec.oracle_says:
            raise ValueError("a discrepancy record needs table_says != oracle_says")
        return rec


def k_range(q: int, max_k: int, small_max_k: int | None, small_q: int = 5) -> range:
    top = max_k if small_max_k is None or q > small_q else max(max_k, small_max_k)
    return range(2, top + 1)


def scalar_sweep(max_q: int, max_k: int, small_max_k: int | None = None) -> list[Cell]:
    """Oracle versus both scalar criteria for every prime power q <= max_q."""
    cells = []
    for q in prime_powers(max_q):
        ctx = field_of_order(q)
        for k in k_range(q, max_k, small_max_k):
            balanced, nonpower = oracle_targets(ctx, k)
            for table, says, mask in (("table1", decide_balanced(q, k), balanced),
                                      ("table2-scalar", decide_nonpower(q, k), nonpower)):
                missing = np.flatnonzero(~mask)
                witness = str(ctx.element(int(missing[0]))) if missing.size else None
                cells.append(Cell(table, q, k, says, bool(mask.all()), witness))
    return cells


def matrix_sweep(max_q: int, max_k: int, small_max_k: int | None = None) -> list[Cell]:
    """Commuting search on every 2 x 2 Jordan cell versus the matrix criterion."""
    cells = []
    for q in prime_powers(max_q):
        ctx = field_of_order(q)
        for k in k_range(q, max_k, small_max_k):
            witness = None
            for a in ctx.elements():
                J = jordan_cell(ctx, 2, a)
                if subalgebra_search(J, k) is None:
                    witness = str(J)
                    break
            cells.append(Cell("table2-matrix", q, k, decide_matrix(q, k), witness is None, witness))
    return cells


def discrepancies(cells) -> list[DiscrepancyRecord]:
    return [DiscrepancyRecord(c.table, c.q, c.k, c.witness, c.table_says, c.oracle_says)
            for c in cells if c.table_says != c.oracle_says]


def load_expected(path: str | Path | None = None) -> list[DiscrepancyRecord]:
    """The committed list of confirmed criterion/oracle disagreements."""
    if path is None:
        text = resources.files("balfact").joinpath("data/expected_discrepancies.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    return [DiscrepancyRecord.from_dict(d) for d in doc["discrepancies"]]


def expected_within(expected, cells) -> list[DiscrepancyRecord]:
    """Expected records whose (table, q, k) cell was part of this sweep."""
    swept = {(c.table, c.q, c.k) for c in cells}
    return [r for r in expected if (r.table, r.q, r.k) in swept]


def _key(r: DiscrepancyRecord):
    return (TABLES.index(r.table), r.q, r.k, r.witness or "", r.table_says, r.oracle_says)


def compare(found, expected) -> tuple[list[DiscrepancyRecord], list[DiscrepancyRecord]]:
    """Records found but not expected, and expected but not found."""
    found_set, expected_set = set(found), set(expected)
    return (sorted(found_set - expected_set, key=_key),
            sorted(expected_set - found_set, key=_key))


def render_grid(cells, table: str) -> str:
    """Rows per field order, columns per k; ``yes``/``no`` from the criterion,
    with ``!`` marking cells where the oracle disagrees."""
    cells = [c for c in cells if c.table == table]
    if not cells:
        return ""
    ks = sorted({c.k for c in cells})
    qs = sorted({c.q for c in cells})
    by = {(c.q, c.k): c for c in cells}
    head = "q \\ k".ljust(8) + "".join(f"{k:>6}" for k in ks)
    lines = [f"[{table}]", head]
    for q in qs:
        row = f"GF({q})".ljust(8)
        for k in ks:
            c = by.get((q, k))
            if c is None:
                row += " " * 6
            else:
                mark = ("yes" if c.table_says else "no") + ("" if c.table_says == c.oracle_says else "!")
                row += f"{mark:>6}"
        lines.append(row)
    return "\n".join(lines)
