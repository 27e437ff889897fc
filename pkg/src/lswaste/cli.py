"""Command-line interface: ``lswaste <command> ...``.

Exit codes: 0 clean, 2 usage error, 3 only known published discrepancies,
4 an unexpected discrepancy.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import analytic, fixtures, report
from .analytic import DomainError, EnergyModel, Pure
from .floodsim import (
    flood_controlled_expectation,
    flood_controlled_mc,
    flood_pure,
    wastage_structural,
)
from .levelsector import (
    ControlledFlood,
    LevelSector,
    PureFlood,
    Query,
    load_field,
    run_query,
)
from .topology import Binary, InvalidSpecError, Nested, Qary, build, parse_spec

EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _depth_list(text: str) -> list[int]:
    """``5,10,15`` or ``4-7`` or a mix: ``4-7,9``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return sorted(set(out))


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc
    return value


def _common(parser: argparse.ArgumentParser, formats=("json", "md", "csv"), default="md") -> None:
    parser.add_argument("--et", type=int, default=100, help="transmission energy per packet, mJ (default 100)")
    parser.add_argument("--er", type=int, default=5, help="reception energy per packet, mJ (default 5)")
    parser.add_argument("--format", choices=formats, default=default)
    parser.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    parser.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lswaste", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("formula", help="evaluate a closed-form wastage expression")
    p.add_argument("family", choices=["linear", "binary", "nested", "qary"])
    p.add_argument("--n", type=int, help="chain length (linear)")
    p.add_argument("--k", type=int, help="broadcasting node, 1-based (linear)")
    p.add_argument("--d", type=int, help="tree depth")
    p.add_argument("--i", type=int, help="broadcasting depth")
    p.add_argument("--s", type=int, help="binary-region depth (nested)")
    p.add_argument("--q", type=int, help="branching factor (qary)")
    p.add_argument("--mode", default="pure", help="pure | controlled:<p>")
    _common(p)

    p = sub.add_parser("tables", help="reproduce the published result tables")
    p.add_argument("table", type=int, nargs="?", choices=[1, 2])
    p.add_argument("--emit-fixtures", action="store_true", help="print the embedded fixtures as JSON")
    _common(p)

    p = sub.add_parser("verify", help="check the closed forms against the structural simulator")
    p.add_argument("scope", choices=["binary", "nested", "qary", "all"])
    p.add_argument("--d-max", type=int, default=8)
    p.add_argument("--q", default="2,3,4,5", help="branching factors for qary scope")
    p.add_argument("--p", default="0,1/4,1/2,3/4,1", help="comma-separated probability grid")
    _common(p)

    p = sub.add_parser("series", help="figure data: N and E per depth")
    p.add_argument("family", choices=["binary", "nested", "qary"])
    p.add_argument("--d", required=True, type=_depth_list, help="depths, e.g. 5,10,15,20 or 4-7")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--s", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--mode", default="pure")
    p.add_argument("--ls", action="store_true", help="add levelling & sectoring columns")
    _common(p, default="csv")

    p = sub.add_parser("simulate", help="flood an explicit tree")
    p.add_argument("--spec", required=True, help="binary:D | nested:S,D | qary:Q,D | linear:N")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--mode", default="pure", help="pure | controlled:<p>")
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo trials for controlled mode")
    p.add_argument("--per-node", action="store_true", help="include per-node flags/probabilities")
    _common(p, formats=("json", "md"))

    p = sub.add_parser("ls-sim", help="route query replies over a geometric field")
    p.add_argument("field", help="field JSON file")
    p.add_argument("--query", required=True, help='e.g. "temp > 30"')
    p.add_argument("--mode", default="levelsector", help="levelsector | pure | controlled:<p>")
    _common(p, formats=("json", "md"))
    return parser


def _write(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render_wastage(values: dict, fmt_name: str, title: str = "") -> str:
    if fmt_name == "json":
        return json.dumps({k: report.fmt(v) for k, v in values.items()}, indent=2)
    if fmt_name == "csv":
        return ",".join(values) + "\n" + ",".join(report.fmt(v) for v in values.values())
    lines = [title, ""] if title else []
    lines += ["| field | value |", "|---|---|"]
    lines += [f"| {k} | {report.fmt(v, approx=True)} |" for k, v in values.items()]
    return "\n".join(lines)


def cmd_formula(args) -> int:
    em = EnergyModel(args.et, args.er)
    mode = analytic.parse_mode(args.mode)

    def need(*names):
        missing = [f"--{n}" for n in names if getattr(args, n) is None]
        if missing:
            raise UsageError(f"{args.family} needs {' '.join(missing)}")

    if args.family == "linear":
        need("n", "k")
        if not isinstance(mode, Pure):
            raise UsageError("linear chain has no controlled-flooding expression")
        r = analytic.linear(args.n, args.k, em)
    elif args.family == "binary":
        need("d", "i")
        r = analytic.binary(args.d, args.i, mode, em)
    elif args.family == "nested":
        need("d", "s", "i")
        r = analytic.nested(args.d, args.s, args.i, mode, em)
    else:
        need("q", "d", "i")
        r = analytic.qary(args.q, args.d, args.i, mode, em)
    values = {"N": r.n_total, "E": r.e_total, **r.as_dict()}
    _write(args, _render_wastage(values, args.format, f"{args.family} ({args.mode})"))
    return 0


def cmd_tables(args) -> int:
    if args.emit_fixtures:
        _write(args, json.dumps(fixtures.as_dict(), indent=2))
        return 0
    if args.table is None:
        raise UsageError("tables needs a table id (1 or 2) or --emit-fixtures")
    rows, rep = report.reproduce_table(args.table, EnergyModel(args.et, args.er))
    if args.format == "json":
        body = {
            "table": args.table,
            "rows": [
                {
                    "case": r.case,
                    "d": r.d,
                    "branch": r.branch,
                    "fixture_N": str(r.fixture_n),
                    "computed_N": report.fmt(r.computed_n),
                    "fixture_E": str(r.fixture_e),
                    "computed_E": report.fmt(r.computed_e),
                }
                for r in rows
            ],
            "discrepancies": rep.to_dict(),
        }
        text = json.dumps(body, indent=2)
    elif args.format == "csv":
        text = report.table_to_csv(rows) + "\n" + rep.to_csv()
    else:
        text = report.table_to_markdown(args.table, rows) + "\n" + rep.to_markdown()
    _write(args, text)
    return rep.exit_code


def _render_report(rep: report.DiscrepancyReport, fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps(rep.to_dict(), indent=2)
    if fmt_name == "csv":
        return rep.to_csv()
    return rep.to_markdown()


def cmd_verify(args) -> int:
    p_grid = [_fraction(p) for p in args.p.split(",") if p.strip()]
    qs = [int(q) for q in args.q.split(",") if q.strip()]
    rep = report.verify(args.scope, args.d_max, p_grid, qs, EnergyModel(args.et, args.er))
    _write(args, _render_report(rep, args.format))
    return rep.exit_code


def cmd_series(args) -> int:
    if args.family == "nested" and args.s is None:
        raise UsageError("nested series needs --s")
    if args.family == "qary" and args.q is None:
        raise UsageError("qary series needs --q")
    rows = report.series(
        args.family, args.d, args.i, s=args.s, q=args.q, mode=analytic.parse_mode(args.mode),
        em=EnergyModel(args.et, args.er), include_ls=args.ls,
    )
    if args.format == "json":
        text = report.series_to_json(rows, args.ls)
    elif args.format == "csv":
        text = report.series_to_csv(rows, args.ls)
    else:
        cols = ["d", "N", "E"] + (["ls_involved", "ls_energy"] if args.ls else [])
        lines = ["| " + " | ".join(cols) + " |", "|---" * len(cols) + "|"]
        for r in rows:
            cells = [r.d, report.fmt(r.n), report.fmt(r.e)] + ([r.ls_involved, r.ls_energy] if args.ls else [])
            lines.append("| " + " | ".join(str(c) for c in cells) + " |")
        text = "\n".join(lines)
    _write(args, text)
    return 0


def _published_for(spec, i, mode, em):
    try:
        if isinstance(spec, Binary):
            return analytic.binary(spec.d, i, mode, em)
        if isinstance(spec, Nested):
            return analytic.nested(spec.d, spec.s, i, mode, em)
        if isinstance(spec, Qary):
            return analytic.qary(spec.q, spec.d, i, mode, em)
    except DomainError:
        return None
    return None


def cmd_simulate(args) -> int:
    spec = parse_spec(args.spec)
    em = EnergyModel(args.et, args.er)
    mode = analytic.parse_mode(args.mode)
    tree = build(spec)
    results = {}
    if isinstance(mode, Pure):
        outcomes = {"pure": flood_pure(tree, args.i)}
    else:
        outcomes = {"expectation": flood_controlled_expectation(tree, args.i, mode.p)}
        if args.trials > 0:
            outcomes["monte_carlo"] = flood_controlled_mc(tree, args.i, mode.p, args.trials, args.seed)
    for name, outcome in outcomes.items():
        w = wastage_structural(outcome, args.i, em)
        results[name] = {"outcome": outcome.to_dict(per_node=args.per_node), "wastage": w.as_dict()}
    published = _published_for(spec, args.i, mode, em)
    note = None
    if published is not None:
        first = next(iter(results.values()))["wastage"]
        if (published.b_t, published.b_r) != (first["b_t"], first["b_r"]):
            note = (
                f"published closed form gives b_t={report.fmt(published.b_t)}, b_r={report.fmt(published.b_r)}; "
                f"structural counts are b_t={report.fmt(first['b_t'])}, b_r={report.fmt(first['b_r'])}"
            )

    if args.format == "json":
        body = {
            "spec": args.spec,
            "i": args.i,
            "mode": args.mode,
            "seed": args.seed,
            "results": {
                k: {"outcome": v["outcome"], "wastage": {f: report.fmt(x) for f, x in v["wastage"].items()}}
                for k, v in results.items()
            },
            "published": None if published is None else {k: report.fmt(v) for k, v in published.as_dict().items()},
            "note": note,
        }
        text = json.dumps(body, indent=2)
    else:
        parts = []
        for name, v in results.items():
            parts.append(_render_wastage(v["wastage"], "md", f"{args.spec}, i={args.i}, {name}"))
            mc = v["outcome"].get("monte_carlo")
            if mc:
                parts.append(f"trials={mc['trials']}, var_b_t={mc['var_b_t']}, var_b_r={mc['var_b_r']}")
        if note:
            parts.append(f"Note: {note}")
        text = "\n\n".join(parts)
    _write(args, text)
    return 0


def _routing_mode(text: str, seed: int):
    text = text.strip().lower()
    if text in ("levelsector", "ls"):
        return LevelSector()
    if text == "pure":
        return PureFlood()
    name, sep, p = text.partition(":")
    if name == "controlled" and sep:
        return ControlledFlood(float(Fraction(p)), seed)
    raise UsageError(f"unknown routing mode {text!r}")


def cmd_ls_sim(args) -> int:
    fld, nodes = load_field(args.field)
    ledger = run_query(
        fld, nodes, EnergyModel(args.et, args.er), Query.parse(args.query), _routing_mode(args.mode, args.seed)
    )
    if args.format == "json":
        text = json.dumps(ledger.to_dict(), indent=2)
    else:
        text = "\n".join(
            [
                "| field | value |",
                "|---|---|",
                f"| transmissions | {ledger.transmissions} |",
                f"| receptions | {ledger.receptions} |",
                f"| energy_mj | {ledger.energy_mj} |",
                f"| delivered | {ledger.delivered_replies} |",
                f"| undelivered | {ledger.undelivered_replies} |",
            ]
        )
    _write(args, text)
    return 0


COMMANDS = {
    "formula": cmd_formula,
    "tables": cmd_tables,
    "verify": cmd_verify,
    "series": cmd_series,
    "simulate": cmd_simulate,
    "ls-sim": cmd_ls_sim,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, InvalidSpecError, ValueError, TypeError) as exc:
        print(f"lswaste {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
