"""Command-line front end.

Exit codes: 0 clean, 1 findings or an insertion-test failure, 2 usage or
parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import crit, detectors, transforms
from .evaluator import Error, evaluate, format_value
from .formula import FormulaSyntaxError
from .refs import CellCoord, Rect
from .structure import Structure, infer_structure
from .workbook import CsvError, Sheet, classify_used_extent, read_sheet, save_sheet

SCHEMA_VERSION = "1"

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------


def _color_enabled(stream) -> bool:
    if os.environ.get("SHEETSPY_NO_COLOR"):
        return False
    return hasattr(stream, "isatty") and stream.isatty()


_COLORS = {"error": "31", "warning": "33", "info": "36", "Fail": "31", "Pass": "32"}


def _paint(text: str, key: str, stream) -> str:
    if not _color_enabled(stream) or key not in _COLORS:
        return text
    return f"\033[{_COLORS[key]}m{text}\033[0m"


def _dump(obj: dict, out) -> None:
    json.dump(obj, out, indent=2, sort_keys=False)
    out.write("\n")


def _load(path: str) -> Sheet:
    try:
        return read_sheet(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None
    except (CsvError, FormulaSyntaxError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _write_result(args, sheet: Sheet, out) -> str | None:
    """Write the new workbook where asked; returns its text when going to stdout."""
    data = save_sheet(sheet)
    if args.in_place:
        Path(args.file).write_bytes(data)
        return None
    if args.out:
        if Path(args.out).resolve() == Path(args.file).resolve():
            raise UsageError("refusing to overwrite the input; use --in-place")
        Path(args.out).write_bytes(data)
        return None
    return data.decode("utf-8")


def _value_json(v):
    if isinstance(v, Error):
        return {"error": v.code}
    return v


# --------------------------------------------------------------------------
# inspect
# --------------------------------------------------------------------------


def structure_report(sheet: Sheet, st: Structure, file: str) -> dict:
    extent = classify_used_extent(sheet)

    def label(node) -> str:
        return node.rect.a1()

    return {
        "schema_version": SCHEMA_VERSION,
        "file": file,
        "extent": extent.a1() if extent else None,
        "blocks": [
            {"rect": b.rect.a1(), "kind": b.kind.value, "shape": b.shape.value,
             "signature": b.signature.text if b.signature else None}
            for b in st.blocks
        ],
        "singles": [{"cell": s.coord.a1(), "role": s.role.value} for s in st.singles],
        "stripes": [
            {"orientation": s.orientation, "span": list(s.span), "members": [label(m) for m in s.members]}
            for s in st.stripes
        ],
        "groups": [
            {"id": g.id, "orientation": g.orientation, "size": g.size, "members": [label(m) for m in g.members]}
            for g in st.groups
        ],
        "seeds": [{"region": s.region.a1(), "serves": s.served.rect.a1(), "axis": s.axis} for s in st.seeds],
        "chain": [{"from": label(a), "to": label(b)} for a, b in st.chain.edges],
    }


def cmd_inspect(args, out) -> int:
    sheet = _load(args.file)
    st = infer_structure(sheet)
    rep = structure_report(sheet, st, args.file)
    if args.json:
        _dump(rep, out)
        return EXIT_OK
    print(f"{args.file}: extent {rep['extent'] or '(empty)'}", file=out)
    print(f"blocks ({len(st.blocks)}):", file=out)
    for b in rep["blocks"]:
        sig = f"  {b['signature']}" if b["signature"] else ""
        print(f"  {b['rect']:10} {b['kind']:8} {b['shape']:14}{sig}", file=out)
    print(f"single cells ({len(st.singles)}):", file=out)
    for s in rep["singles"]:
        print(f"  {s['cell']:10} {s['role']}", file=out)
    multi = [s for s in rep["stripes"] if len(s["members"]) > 1]
    print(f"stripes ({len(multi)} with more than one block):", file=out)
    for s in multi:
        lo, hi = s["span"]
        what = "rows" if s["orientation"] == "horizontal" else "columns"
        print(f"  {s['orientation']:10} {what} {lo}-{hi}: {', '.join(s['members'])}", file=out)
    print(f"groups ({len(rep['groups'])}):", file=out)
    for g in rep["groups"]:
        print(f"  {g['id']:4} {g['orientation']:6} size {g['size']}: {', '.join(g['members'])}", file=out)
    print(f"seeds ({len(rep['seeds'])}):", file=out)
    for s in rep["seeds"]:
        print(f"  {s['region']} serves {s['serves']}", file=out)
    print(f"chain edges ({len(rep['chain'])}):", file=out)
    for e in rep["chain"]:
        print(f"  {e['from']} -> {e['to']}", file=out)
    return EXIT_OK


# --------------------------------------------------------------------------
# lint
# --------------------------------------------------------------------------


def _parse_constants(text: str | None):
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--allow-const expects comma-separated numbers, got {text!r}") from None


def cmd_lint(args, out) -> int:
    sheet = _load(args.file)
    diags = detectors.lint(sheet, allow_const=_parse_constants(args.allow_const))
    rep = detectors.report(diags, args.file)
    if args.json:
        _dump(rep, out)
    else:
        for d in diags:
            sev = _paint(f"{d.severity.value:7}", d.severity.value, out)
            cells = ",".join(r.a1() for r in d.cells)
            print(f"{args.file}: {sev} {d.code:20} {cells}: {d.message}", file=out)
        s = rep["summary"]
        print(f"{s['errors']} error(s), {s['warnings']} warning(s), {s['infos']} info", file=out)
    serious = rep["summary"]["errors"] + rep["summary"]["warnings"]
    return EXIT_FINDINGS if serious else EXIT_OK


# --------------------------------------------------------------------------
# crit
# --------------------------------------------------------------------------


def cmd_crit(args, out) -> int:
    sheet = _load(args.file)
    report = crit.run_crit(sheet, refill=not args.strict, groups=not args.plain, verbose=args.verbose)
    if args.json:
        rep = report.to_dict()
        rep["file"] = args.file
        rep["mode"] = {"refill": not args.strict, "groups": not args.plain}
        _dump(rep, out)
    else:
        for p in report.positions:
            verdict = _paint(p.verdict, p.verdict, out)
            print(f"{p.edit.label():10} {verdict}", file=out)
            for r in p.reasons:
                print(f"    {r.kind.value:13} {', '.join(c.a1() for c in r.cells[:6])}: {r.detail}", file=out)
        print(f"overall: {_paint(report.overall, report.overall, out)}", file=out)
    return EXIT_FINDINGS if report.overall == "Fail" else EXIT_OK


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------


def cmd_eval(args, out) -> int:
    sheet = _load(args.file)
    grid = evaluate(sheet)
    coords = sorted(grid, key=lambda c: (c.row, c.col))
    if args.formulas_only:
        coords = [c for c in coords if sheet[c].is_formula]
    if args.json:
        _dump({
            "schema_version": SCHEMA_VERSION,
            "file": args.file,
            "values": {c.a1(): _value_json(grid[c]) for c in coords},
        }, out)
    else:
        for c in coords:
            print(f"{c.a1()}\t{format_value(grid[c])}", file=out)
    return EXIT_OK


# --------------------------------------------------------------------------
# fix / insert / replicate
# --------------------------------------------------------------------------


def _finish(args, sheet: Sheet, changes: list, out, err) -> int:
    text = _write_result(args, sheet, out)
    if args.json:
        rep = {"schema_version": SCHEMA_VERSION, "file": args.file,
               "changes": [c.to_dict() for c in changes]}
        if text is not None:
            rep["workbook"] = text
        else:
            rep["written"] = args.file if args.in_place else args.out
        _dump(rep, out)
        return EXIT_OK
    if text is not None:
        out.write(text)
    for c in changes:
        print(str(c), file=err)
    return EXIT_OK


def cmd_fix(args, out, err) -> int:
    sheet = _load(args.file)
    new, changes = transforms.fix(sheet)
    return _finish(args, new, changes, out, err)


def cmd_insert(args, out, err) -> int:
    sheet = _load(args.file)
    st = infer_structure(sheet)
    try:
        group = st.group(args.group, "column" if args.col else "row")
    except KeyError:
        raise UsageError(f"no {'column' if args.col else 'row'} group {args.group!r} in {args.file}") from None
    try:
        new = transforms.group_insert(sheet, group, args.at, with_guard=not args.no_guard, structure=st)
    except (transforms.GroupMisaligned, ValueError) as exc:
        raise UsageError(str(exc)) from None
    axis = "row" if group.orientation == "row" else "col"
    lines = sorted({m.rect.span(axis)[0] + args.at - 1 for m in group.members})
    edits = [crit.InsertionEdit(axis, i) for i in lines]
    changes = [
        transforms.Change("insert", m.rect, m.rect.a1(), crit.map_rect(m.rect, edits).a1(),
                          f"group {group.id} offset {args.at}")
        for m in group.members
    ]
    return _finish(args, new, changes, out, err)


def _parse_rects(text: str) -> list[Rect]:
    try:
        return [Rect.parse(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"--mark: {exc}") from None


def cmd_replicate(args, out, err) -> int:
    sheet = _load(args.file)
    marked = _parse_rects(args.mark)
    if args.to:
        try:
            dest = CellCoord.parse(args.to)
        except ValueError as exc:
            raise UsageError(f"--to: {exc}") from None
    elif marked:
        dest = transforms.default_destination(sheet, marked)
    else:
        dest = CellCoord(1, 1)
    try:
        new = transforms.replicate(sheet, marked, dest)
    except (transforms.ReplicationAmbiguous, transforms.DestinationOccupied) as exc:
        raise UsageError(str(exc)) from None
    changes = []
    if marked:
        box = marked[0]
        for r in marked[1:]:
            box = box.union(r)
        moved = box.translate(dest.col - box.left, dest.row - box.top)
        changes.append(transforms.Change("copy", box, box.a1(), moved.a1(), f"{len(marked)} marked area(s)"))
    return _finish(args, new, changes, out, err)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sheetspy", description="Structure checks and safe edits for formula spreadsheets.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("inspect", help="show inferred blocks, stripes, groups and seeds")
    s.add_argument("file")
    s.add_argument("--json", action="store_true")

    s = sub.add_parser("lint", help="report structural smells")
    s.add_argument("file")
    s.add_argument("--json", action="store_true")
    s.add_argument("--allow-const", metavar="LIST", help="comma-separated constants allowed inside filled formulas")

    s = sub.add_parser("crit", help="try inserting a row or column at every position")
    s.add_argument("file")
    s.add_argument("--strict", action="store_true", help="do not re-fill blocks after insertion")
    s.add_argument("--plain", action="store_true", help="insert single lines, not across connected groups")
    s.add_argument("--verbose", action="store_true", help="also list positions in blank bands")
    s.add_argument("--json", action="store_true")

    s = sub.add_parser("eval", help="print computed values")
    s.add_argument("file")
    s.add_argument("--json", action="store_true")
    s.add_argument("--formulas-only", action="store_true")

    def writer(s):
        s.add_argument("file")
        dest = s.add_mutually_exclusive_group()
        dest.add_argument("--out", metavar="FILE", help="write the new workbook here (default: stdout)")
        dest.add_argument("--in-place", action="store_true", help="overwrite the input file")
        s.add_argument("--json", action="store_true", help="print the change log as JSON")

    s = sub.add_parser("fix", help="autofill deviant cells and correct dollaring and ranges")
    writer(s)

    s = sub.add_parser("insert", help="insert a line in every block of a connected group")
    writer(s)
    s.add_argument("--group", required=True, help="group id (R1, C2) or a cell inside a member block")
    s.add_argument("--at", required=True, type=int, help="1-based position of the new line within each member")
    s.add_argument("--col", action="store_true", help="insert a column into a column group")
    s.add_argument("--no-guard", action="store_true", help="disallow appending on the guard line")

    s = sub.add_parser("replicate", help="copy marked blocks so they point at each other")
    writer(s)
    s.add_argument("--mark", required=True, help="comma-separated ranges and cells to copy")
    s.add_argument("--to", metavar="CELL", help="top-left of the copy (default: below the used area)")
    return p


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command in ("fix", "insert", "replicate"):
            handler = {"fix": cmd_fix, "insert": cmd_insert, "replicate": cmd_replicate}[args.command]
            return handler(args, out, err)
        handler = {"inspect": cmd_inspect, "lint": cmd_lint, "crit": cmd_crit, "eval": cmd_eval}[args.command]
        return handler(args, out)
    except UsageError as exc:
        print(f"sheetspy: error: {exc}", file=err)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
