"""Table reproduction, formula-vs-oracle verification and figure series.

All numbers stay exact; renderers emit them as decimal strings (or
``num/den`` for non-integral rationals) so nothing is lost to floats.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import analytic, fixtures
from .analytic import Controlled, EnergyModel, Exact, PURE, exact
from .floodsim import flood_controlled_expectation, flood_pure, wastage_structural
from .levelsector import constant_waste_demo
from .topology import Binary, Nested, Qary, build, level_sizes

EXIT_CLEAN = 0
EXIT_KNOWN = 3
EXIT_UNEXPECTED = 4

DEFAULT_P_GRID = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))
MAX_TREE_NODES = 10**6


def fmt(value, approx: bool = False) -> str:
    """Render an exact value; integers plainly, rationals as ``num/den``."""
    if isinstance(value, Fraction) and value.denominator != 1:
        text = f"{value.numerator}/{value.denominator}"
        return f"{text} (~{float(value):.6g})" if approx else text
    if isinstance(value, Fraction):
        return str(value.numerator)
    return str(value)


def parse_exact(text: str) -> Exact:
    return exact(Fraction(text))


@dataclass(frozen=True)
class DiscrepancyEntry:
    source: str  # fixture | formula-vs-oracle | published-vs-derived
    location: str
    expected: Exact
    computed: Exact
    known: bool = False
    note: str = ""

    @property
    def difference(self) -> Exact:
        return exact(Fraction(self.expected) - Fraction(self.computed))

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "location": self.location,
            "expected": fmt(self.expected),
            "computed": fmt(self.computed),
            "difference": fmt(self.difference),
            "known": self.known,
            "note": self.note,
        }


@dataclass
class DiscrepancyReport:
    entries: list[DiscrepancyEntry] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    checked: int = 0

    def check(self, source, location, expected, computed, known: bool = False, note: str = "") -> None:
        self.checked += 1
        if Fraction(expected) != Fraction(computed):
            self.entries.append(DiscrepancyEntry(source, location, exact(expected), exact(computed), known, note))

    @property
    def clean(self) -> bool:
        return not self.entries

    @property
    def exit_code(self) -> int:
        if self.clean:
            return EXIT_CLEAN
        return EXIT_KNOWN if all(e.known for e in self.entries) else EXIT_UNEXPECTED

    def to_dict(self) -> dict:
        return {
            "checked": self.checked,
            "clean": self.clean,
            "exit_code": self.exit_code,
            "notes": self.notes,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["source", "location", "expected", "computed", "difference", "known", "note"]
        writer = csv.DictWriter(buf, cols, lineterminator="\n")
        writer.writeheader()
        for e in self.entries:
            writer.writerow(e.to_dict())
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [f"Comparisons: {self.checked}, discrepancies: {len(self.entries)}", ""]
        lines += [f"> {n}" for n in self.notes]
        if self.entries:
            lines += ["", "| source | location | expected | computed | difference | known | note |", "|---" * 7 + "|"]
            for e in self.entries:
                d = e.to_dict()
                lines.append("| " + " | ".join(str(d[k]) for k in d) + " |")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TableRow:
    case: str
    d: int
    branch: str  # "" for table 1, "i>s" / "i<=s" for table 2
    fixture_n: int
    fixture_e: int
    computed_n: Exact
    computed_e: Exact


N_COLUMN_NOTE = (
    "table 2, i<=s: the printed N column equals B'_r alone (not B'_t + B'_r as its header says); "
    "it is compared against B'_r, while the E column is compared against T_x + R_x."
)


def reproduce_table(table_id: int, em: EnergyModel | None = None) -> tuple[list[TableRow], DiscrepancyReport]:
    em = em or EnergyModel(fixtures.E_T, fixtures.E_R)
    report = DiscrepancyReport()
    rows: list[TableRow] = []

    def cell(location, fixture, computed):
        note = fixtures.KNOWN_TABLE_TYPOS.get(location, "")
        report.check("fixture", location, fixture, computed, known=bool(note), note=note)

    if table_id == 1:
        for case, d, n, e in fixtures.TABLE_1:
            r = analytic.binary(d, fixtures.BINARY_I, PURE, em)
            rows.append(TableRow(case, d, "", n, e, r.n_total, r.e_total))
            cell(f"table1/{case}/d={d}/N", n, r.n_total)
            cell(f"table1/{case}/d={d}/E", e, r.e_total)
    elif table_id == 2:
        report.notes.append(N_COLUMN_NOTE)
        for case, d, n_gt, n_le, e_gt, e_le in fixtures.TABLE_2:
            gt = analytic.nested(d, fixtures.NESTED_GT["s"], fixtures.NESTED_GT["i"], PURE, em)
            le = analytic.nested(d, fixtures.NESTED_LE["s"], fixtures.NESTED_LE["i"], PURE, em)
            rows.append(TableRow(case, d, "i>s", n_gt, e_gt, gt.n_total, gt.e_total))
            rows.append(TableRow(case, d, "i<=s", n_le, e_le, le.b_r, le.e_total))
            cell(f"table2/{case}/d={d}/i>s/N", n_gt, gt.n_total)
            cell(f"table2/{case}/d={d}/i<=s/N", n_le, le.b_r)
            cell(f"table2/{case}/d={d}/i>s/E", e_gt, gt.e_total)
            cell(f"table2/{case}/d={d}/i<=s/E", e_le, le.e_total)
    else:
        raise ValueError(f"unknown table {table_id}; expected 1 or 2")
    return rows, report


def table_to_markdown(table_id: int, rows: Sequence[TableRow]) -> str:
    lines = [f"Table {table_id}", "", "| case | d | branch | N (printed) | N (computed) | E (printed) | E (computed) |"]
    lines.append("|---" * 7 + "|")
    for r in rows:
        lines.append(
            f"| {r.case} | {r.d} | {r.branch or '-'} | {r.fixture_n} | {fmt(r.computed_n)} "
            f"| {r.fixture_e} | {fmt(r.computed_e)} |"
        )
    return "\n".join(lines) + "\n"


def table_to_csv(rows: Sequence[TableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "d", "branch", "fixture_N", "computed_N", "fixture_E", "computed_E"])
    for r in rows:
        w.writerow([r.case, r.d, r.branch, r.fixture_n, fmt(r.computed_n), r.fixture_e, fmt(r.computed_e)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Verification against the structural oracle
# ---------------------------------------------------------------------------

def _tree_nodes(spec) -> int:
    return sum(level_sizes(spec))


def _verify_uniform(report, family, q, d_max, p_grid, em):
    """Binary / Q-ary: pure and controlled formulas against the realized tree."""
    for d in range(d_max + 1):
        spec = Binary(d) if family == "binary" else Qary(q, d)
        if _tree_nodes(spec) > MAX_TREE_NODES:
            report.notes.append(f"{family} q={q}: stopped at d={d - 1} (tree size bound)")
            break
        tree = build(spec)
        for i in range(d + 1):
            tag = f"{family}{'' if family == 'binary' else f'(q={q})'}/d={d}/i={i}"
            published = analytic.qary(q, d, i, PURE, em)
            structural = wastage_structural(flood_pure(tree, i), i, em)
            report.check("formula-vs-oracle", f"{tag}/pure/b_t", published.b_t, structural.b_t)
            report.check("formula-vs-oracle", f"{tag}/pure/b_r", published.b_r, structural.b_r)
            if family == "qary" and q == 2:
                ref = analytic.binary(d, i, PURE, em)
                report.check("formula-vs-oracle", f"{tag}/q2-vs-binary/n_total", ref.n_total, published.n_total)
            for p in p_grid:
                mode = Controlled(p)
                pub = analytic.qary(q, d, i, mode, em)
                dp = wastage_structural(flood_controlled_expectation(tree, i, p), i, em)
                report.check("formula-vs-oracle", f"{tag}/p={p}/b_t", pub.b_t, dp.b_t)
                factor_p = Fraction(pub.b_r) == p * Fraction(dp.b_r)
                report.check(
                    "published-vs-derived",
                    f"{tag}/p={p}/b_r",
                    pub.b_r,
                    dp.b_r,
                    known=factor_p,
                    note="published = p x derived expectation" if factor_p else "",
                )
                if p == 1:
                    report.check("formula-vs-oracle", f"{tag}/p=1-vs-pure/b_r", published.b_r, pub.b_r)


def _verify_nested(report, d_max, p_grid, em):
    for d in range(d_max + 1):
        for s in range(d + 1):
            tree = build(Nested(s, d))
            for i in range(d + 1):
                tag = f"nested/d={d}/s={s}/i={i}"
                published = analytic.nested(d, s, i, PURE, em)
                flood = flood_pure(tree, i)
                structural = wastage_structural(flood, i, em)
                layer = [Fraction(c) for c in flood.rx_by_depth]  # full layer sizes below depth i
                if i > s:
                    ratio = Fraction(3, 2) ** s
                    for name in ("b_t", "b_r"):
                        got, want = getattr(published, name), getattr(structural, name)
                        ok = Fraction(got) == ratio * want
                        report.check(
                            "published-vs-derived",
                            f"{tag}/pure/{name}",
                            got,
                            want,
                            known=ok,
                            note=f"published = (3/2)^{s} x structural (3^i broadcasters assumed)" if ok else "",
                        )
                else:
                    head = sum(layer[i + 2:s + 1], Fraction(0))
                    tail = layer[s + 1:d + 1]
                    shifted = {"b_t": head + sum(tail, Fraction(0)) / 3, "b_r": head + sum(tail, Fraction(0))}
                    for name in ("b_t", "b_r"):
                        got, want = getattr(published, name), getattr(structural, name)
                        ok = Fraction(got) == shifted[name]
                        report.check(
                            "published-vs-derived",
                            f"{tag}/pure/{name}",
                            got,
                            want,
                            known=ok,
                            note="published i<=s sums cover shifted depth ranges of the same tree" if ok else "",
                        )
                if 1 in p_grid:
                    ctl = analytic.nested(d, s, i, Controlled(1), em)
                    report.check("formula-vs-oracle", f"{tag}/p=1-vs-pure/b_t", published.b_t, ctl.b_t)
                    three_fold = i > s and Fraction(ctl.b_r) * 3 == published.b_r
                    report.check(
                        "published-vs-derived",
                        f"{tag}/p=1-vs-pure/b_r",
                        published.b_r,
                        ctl.b_r,
                        known=three_fold,
                        note="controlled i>s reception printed with exponent j-i-1" if three_fold else "",
                    )


def verify(
    scope: str = "all",
    d_max: int = 8,
    p_grid: Iterable = DEFAULT_P_GRID,
    qs: Iterable[int] = (2, 3, 4, 5),
    em: EnergyModel | None = None,
) -> DiscrepancyReport:
    em = em or EnergyModel()
    p_grid = [Fraction(p) for p in p_grid]
    report = DiscrepancyReport()
    if scope not in ("binary", "nested", "qary", "all"):
        raise ValueError(f"unknown scope {scope!r}")
    if scope in ("binary", "all"):
        _verify_uniform(report, "binary", 2, d_max, p_grid, em)
    if scope in ("qary", "all"):
        for q in qs:
            _verify_uniform(report, "qary", q, d_max, p_grid, em)
    if scope in ("nested", "all"):
        _verify_nested(report, d_max, p_grid, em)
    return report


# ---------------------------------------------------------------------------
# Figure series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeriesRow:
    d: int
    n: Exact
    e: Exact
    ls_involved: int | None = None
    ls_energy: int | None = None


def series(
    family: str,
    depths: Iterable[int],
    i: int,
    s: int | None = None,
    q: int | None = None,
    mode=PURE,
    em: EnergyModel | None = None,
    include_ls: bool = False,
) -> list[SeriesRow]:
    em = em or EnergyModel()
    rows = []
    for d in sorted(set(depths)):
        if family == "binary":
            r, spec = analytic.binary(d, i, mode, em), Binary(d)
        elif family == "nested":
            r, spec = analytic.nested(d, s, i, mode, em), Nested(s, d)
        elif family == "qary":
            r, spec = analytic.qary(q, d, i, mode, em), Qary(q, d)
        else:
            raise ValueError(f"unknown family {family!r}")
        if include_ls:
            pt = constant_waste_demo(spec, i, em)[0]
            rows.append(SeriesRow(d, r.n_total, r.e_total, pt.involved, pt.energy))
        else:
            rows.append(SeriesRow(d, r.n_total, r.e_total))
    return rows


def series_to_csv(rows: Sequence[SeriesRow], include_ls: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "N", "E"] + (["ls_involved", "ls_energy"] if include_ls else []))
    for r in rows:
        w.writerow([r.d, fmt(r.n), fmt(r.e)] + ([r.ls_involved, r.ls_energy] if include_ls else []))
    return buf.getvalue()


def series_to_json(rows: Sequence[SeriesRow], include_ls: bool = False) -> str:
    out = []
    for r in rows:
        item = {"d": r.d, "N": fmt(r.n), "E": fmt(r.e)}
        if include_ls:
            item |= {"ls_involved": str(r.ls_involved), "ls_energy": str(r.ls_energy)}
        out.append(item)
    return json.dumps(out, indent=2)
