import csv
import io
import json
import re
from fractions import Fraction
from pathlib import Path

import pytest

from lswaste import fixtures, report
from lswaste.analytic import EnergyModel, PURE, nested
from lswaste.cli import main

CHAIN = Path(__file__).resolve().parent.parent / "fields" / "chain.json"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


@pytest.mark.parametrize(
    "argv, n, e",
    [
        (["binary", "--d", "7", "--i", "2"], "360", "13300"),
        (["nested", "--d", "8", "--s", "2", "--i", "3"], "12960", "372700"),
        (["binary", "--d", "3", "--i", "2"], "0", "100"),
        (["linear", "--n", "10", "--k", "3"], "13", "735"),
    ],
)
def test_formula(capsys, argv, n, e):
    code, data = run_json(capsys, "formula", *argv)
    assert code == 0
    assert (data["N"], data["E"]) == (n, e)


def test_formula_rational_rendering(capsys):
    code, data = run_json(capsys, "formula", "binary", "--d", "5", "--i", "2", "--mode", "controlled:1/3")
    assert data["b_t"] == "40/9" and data["N"] == "200/27"
    code, out, _ = run(capsys, "formula", "binary", "--d", "5", "--i", "2", "--mode", "controlled:1/3")
    assert "40/9" in out and re.search(r"4\.44", out)


@pytest.mark.parametrize(
    "argv",
    [
        ["formula", "binary", "--d", "3"],
        ["formula", "binary", "--d", "3", "--i", "5"],
        ["formula", "linear", "--n", "4", "--k", "1", "--mode", "controlled:1/2"],
        ["formula", "qary", "--q", "0", "--d", "3", "--i", "1"],
        ["formula", "binary", "--d", "3", "--i", "1", "--mode", "controlled:2"],
        ["tables"],
        ["series", "nested", "--d", "5", "--i", "3"],
        ["simulate", "--spec", "ring:3", "--i", "0"],
    ],
)
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err and out == ""


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["formula", "hexagon"])
    assert info.value.code == 2


def test_tables_1_clean(capsys):
    code, data = run_json(capsys, "tables", "1")
    assert code == report.EXIT_CLEAN
    assert data["discrepancies"]["entries"] == []
    assert len(data["rows"]) == 12
    assert all(r["fixture_N"] == r["computed_N"] and r["fixture_E"] == r["computed_E"] for r in data["rows"])


def test_tables_2_known_only(capsys):
    code, data = run_json(capsys, "tables", "2")
    assert code == report.EXIT_KNOWN
    entries = data["discrepancies"]["entries"]
    assert all(e["known"] for e in entries)
    assert {e["location"] for e in entries} == set(fixtures.KNOWN_TABLE_TYPOS)


def test_tables_markdown_and_csv(capsys):
    _, md, _ = run(capsys, "tables", "1")
    assert md.startswith("Table 1") and "| Case 1 | 4 |" in md
    assert "115342580" in md
    _, text, _ = run(capsys, "tables", "2", "--format", "csv")
    assert "6973568640" in text and "39602984180" in text


def test_emit_fixtures_verbatim(capsys):
    code, out, _ = run(capsys, "tables", "--emit-fixtures")
    assert code == 0
    data = json.loads(out)
    assert data == json.loads(json.dumps(fixtures.as_dict()))
    assert "8991982580" in out and "17486" in out


def test_out_writes_file(capsys, tmp_path):
    target = tmp_path / "t1.csv"
    code, out, _ = run(capsys, "tables", "1", "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    assert "24552" in target.read_text()


def test_verify_binary_factor_p(capsys):
    code, data = run_json(capsys, "verify", "binary", "--d-max", "10")
    assert code == report.EXIT_KNOWN
    assert data["entries"]
    for e in data["entries"]:
        assert e["known"] and e["location"].endswith("b_r")
        p = Fraction(re.search(r"p=(\d+(?:/\d+)?)/", e["location"]).group(1))
        assert Fraction(e["expected"]) == p * Fraction(e["computed"])


def test_verify_nested_ratio(capsys):
    code, data = run_json(capsys, "verify", "nested", "--d-max", "6", "--p", "1")
    assert code == report.EXIT_KNOWN
    gt = [e for e in data["entries"] if "/pure/" in e["location"]]
    seen = 0
    for e in gt:
        d, s, i = (int(re.search(rf"{k}=(\d+)", e["location"]).group(1)) for k in "dsi")
        if i > s:
            seen += 1
            assert Fraction(e["expected"]) == Fraction(3, 2) ** s * Fraction(e["computed"])
    assert seen > 0


@pytest.mark.parametrize("p, code", [("0,1", 0), ("0,1/4,1/2,3/4,1", 3)])
def test_verify_qary_two(capsys, p, code):
    got, data = run_json(capsys, "verify", "qary", "--q", "2", "--d-max", "8", "--p", p)
    assert got == code
    assert all(e["known"] for e in data["entries"])


def test_verify_all_has_no_unexpected(capsys):
    rep = report.verify("all", d_max=5)
    assert rep.exit_code == report.EXIT_KNOWN
    assert rep.checked > 0


def test_report_round_trip():
    rep = report.DiscrepancyReport()
    rep.check("fixture", "x", 10**30 + 1, Fraction(1, 3), known=True)
    rep.check("fixture", "same", 5, 5)
    assert len(rep.entries) == 1 and rep.checked == 2
    row = next(csv.DictReader(io.StringIO(rep.to_csv())))
    assert report.parse_exact(row["expected"]) == 10**30 + 1
    assert report.parse_exact(row["computed"]) == Fraction(1, 3)
    data = json.loads(json.dumps(rep.to_dict()))
    assert report.parse_exact(data["entries"][0]["difference"]) == 10**30 + 1 - Fraction(1, 3)


def test_series_binary(capsys):
    code, out, _ = run(capsys, "series", "binary", "--d", "5,10,15,20", "--i", "2", "--ls")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["E"] for r in rows] == ["2740", "111860", "3603700", "115342580"]
    assert len({(r["ls_involved"], r["ls_energy"]) for r in rows}) == 1


def test_series_nested_gt_first_cells():
    rows = report.series("nested", [7, 9, 11], 3, s=2)
    assert [r.n for r in rows] == [4212, 39204, 354132]


def test_series_nested_d13_printed_cell_is_typo():
    # the printed 3183484 disagrees with the closed forms and with the row's own energy
    (row,) = report.series("nested", [13], 3, s=2)
    assert row.n == 3188484 != 3183484
    r = nested(13, 2, 3, PURE, EnergyModel(100, 5))
    assert r.e_total == 91669015


@pytest.mark.parametrize("fmt_name", ["json", "md"])
def test_series_ls_constant_any_family(capsys, fmt_name):
    code, out, _ = run(capsys, "series", "qary", "--q", "3", "--d", "4-8", "--i", "2", "--ls", "--format", fmt_name)
    assert code == 0
    if fmt_name == "json":
        rows = json.loads(out)
        rows = rows["rows"] if isinstance(rows, dict) else rows
        assert [int(r["d"]) for r in rows] == [4, 5, 6, 7, 8]
        assert len({(r["ls_involved"], r["ls_energy"]) for r in rows}) == 1
    else:
        assert out.count("\n") == 7


def test_series_sorted_and_deduplicated(capsys):
    _, out, _ = run(capsys, "series", "binary", "--d", "9,4-6,5", "--i", "2")
    assert [r["d"] for r in csv.DictReader(io.StringIO(out))] == ["4", "5", "6", "9"]


def test_simulate_pure_binary(capsys):
    code, data = run_json(capsys, "simulate", "--spec", "binary:6", "--i", "2", "--mode", "pure")
    assert code == 0
    w = data["results"]["pure"]["wastage"]
    assert (w["b_t"], w["b_r"]) == ("56", "112")
    assert data["note"] is None


def test_simulate_controlled_p1_matches_pure(capsys):
    _, ctl = run_json(capsys, "simulate", "--spec", "binary:6", "--i", "2", "--mode", "controlled:1", "--trials", "1")
    mc = ctl["results"]["monte_carlo"]["wastage"]
    assert (mc["b_t"], mc["b_r"]) == ("56", "112")
    ex = ctl["results"]["expectation"]["wastage"]
    assert (ex["b_t"], ex["b_r"]) == ("56", "112")


def test_simulate_nested_note(capsys):
    code, data = run_json(capsys, "simulate", "--spec", "nested:2,5", "--i", "3")
    w = data["results"]["pure"]["wastage"]
    assert (w["b_t"], w["b_r"]) == ("36", "108")
    assert "81" in data["note"] and "243" in data["note"]
    _, md, _ = run(capsys, "simulate", "--spec", "nested:2,5", "--i", "3")
    assert "Note:" in md


def test_simulate_seed_determinism(capsys):
    argv = ["simulate", "--spec", "binary:5", "--i", "1", "--mode", "controlled:1/2", "--trials", "500", "--seed", "9"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_ls_sim_chain(capsys):
    code, data = run_json(capsys, "ls-sim", str(CHAIN), "--query", "temp > 30")
    assert code == 0
    assert (data["transmissions"], data["receptions"], data["energy_mj"]) == (2, 3, "215")
    _, none = run_json(capsys, "ls-sim", str(CHAIN), "--query", "temp > 90")
    assert none["energy_mj"] == "0"
    _, pure = run_json(capsys, "ls-sim", str(CHAIN), "--query", "temp > 30", "--mode", "pure")
    assert int(pure["energy_mj"]) >= int(data["energy_mj"])


def test_ls_sim_energy_flags_and_tmp_field(capsys, tmp_path):
    field = json.loads(CHAIN.read_text())
    path = tmp_path / "f.json"
    path.write_text(json.dumps(field))
    _, data = run_json(capsys, "ls-sim", str(path), "--query", "temp>30", "--et", "10", "--er", "1")
    assert data["energy_mj"] == "23"
    code, _, err = run(capsys, "ls-sim", str(path), "--query", "temp 30")
    assert code == 2 and err
