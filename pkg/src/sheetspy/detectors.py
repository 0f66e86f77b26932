"""Detection checks producing diagnostics."""

from __future__ import annotations

import enum
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable

import networkx as nx

from .formula import FillSignature, Node, Number, Percent, Range, Ref, fill_signature, list_references, walk
from .refs import CellCoord, Rect
from .rules import DEFAULT_TABLE, DollaringRuleTable, FillAxis, TargetKind
from .structure import (
    Block,
    BlockKind,
    SingleCell,
    Structure,
    infer_structure,
    reference_rect,
)
from .workbook import Sheet, classify_used_extent

__all__ = [
    "Severity",
    "Diagnostic",
    "CATALOG",
    "DEFAULT_CONSTANT_ALLOWLIST",
    "FillComponent",
    "fill_components",
    "check_fill_consistency",
    "check_dollaring",
    "reconcile_precedents",
    "check_layout",
    "check_guards",
    "check_constants",
    "check_self_refs",
    "lint",
    "report",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = "1"
DEFAULT_CONSTANT_ALLOWLIST = frozenset({0.0, 1.0, 2.0, 10.0, 100.0, 1000.0})


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


CATALOG = {
    "SPY-FILL-001": (Severity.ERROR, "fill-consistency"),
    "SPY-DOLLAR-001": (Severity.ERROR, "dollaring-normal-reference"),
    "SPY-DOLLAR-002": (Severity.ERROR, "dollaring-complex-reference"),
    "SPY-REF-PARTIAL-001": (Severity.WARNING, "partial-access"),
    "SPY-REF-ORPHAN-001": (Severity.WARNING, "reference-outside-structure"),
    "SPY-GAP-001": (Severity.WARNING, "gap-between-blocks"),
    "SPY-LAYOUT-001": (Severity.WARNING, "insertion-slices-unaligned-blocks"),
    "SPY-GUARD-001": (Severity.WARNING, "missing-guard-line"),
    "SPY-CONST-001": (Severity.INFO, "constant-in-filled-formula"),
    "SPY-SELF-001": (Severity.INFO, "previous-or-self-reference"),
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: Severity
    cells: tuple[Rect, ...]
    message: str
    rule_ref: str

    @classmethod
    def make(cls, code: str, cells: Iterable[Rect], message: str, severity: Severity | None = None) -> "Diagnostic":
        default, rule = CATALOG[code]
        cells = tuple(dict.fromkeys(cells))
        if not cells:
            raise ValueError("a diagnostic needs at least one cell")
        return cls(code, severity or default, cells, message, rule)

    @property
    def sort_key(self) -> tuple:
        first = self.cells[0]
        return (self.code, first.top, first.left, self.message)

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity.value,
            "cells": [r.a1() for r in self.cells],
            "message": self.message,
            "rule_ref": self.rule_ref,
        }


def _formula_nodes(structure: Structure) -> list:
    nodes = [b for b in structure.blocks if b.kind is BlockKind.FORMULA]
    nodes += [s for s in structure.singles if s.role.value == "one-off-formula"]
    return sorted(nodes, key=lambda n: (n.rect.top, n.rect.left))


def _anchor(node) -> CellCoord:
    return node.rect.top_left


def _own_region(structure: Structure, node) -> list[Rect]:
    """The node itself plus any seed region serving it."""
    regions = [node.rect]
    regions += [s.region for s in structure.seeds if s.served == node]
    return regions


def resolve_target(structure: Structure, node, rect: Rect):
    """Structural node a reference from ``node`` points at, or None.

    Returns ``"self"`` when the reference touches the node's own cells or its
    seed. A seed serving another block resolves to that block.
    """
    own = _own_region(structure, node)
    if any(r.intersects(rect) for r in own):
        return "self"
    targets = structure.index.overlapping(rect)
    if not targets:
        return None
    best = max(targets, key=lambda t: t.rect.intersection(rect).size)
    seed = structure.seed_for(best.rect.top_left)
    if seed is not None and seed.region == best.rect:
        return seed.served
    return best


def target_kind(target) -> TargetKind:
    return TargetKind.for_shape(target.shape)


def _complex_on(rng, fill: FillAxis) -> bool:
    s, e = rng.start, rng.end
    return ("col" in fill.axes and s.col_abs != e.col_abs) or ("row" in fill.axes and s.row_abs != e.row_abs)


# --------------------------------------------------------------------------
# Individual checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FillComponent:
    """A rectangle of adjacent formulas that should be one filled block."""

    rect: Rect
    signature: FillSignature  # the majority signature
    source: CellCoord  # a member carrying it
    deviants: tuple[CellCoord, ...]


def fill_components(sheet: Sheet, structure: Structure) -> list[FillComponent]:
    """Rectangular runs of adjacent formulas whose members disagree."""
    seed_cells = {c for s in structure.seeds for c in s.region.cells()}
    formula_cells = {c for c, _ in sheet.formulas() if c not in seed_cells}
    graph = nx.Graph()
    graph.add_nodes_from(formula_cells)
    for c in formula_cells:
        for n in (CellCoord(c.col + 1, c.row), CellCoord(c.col, c.row + 1)):
            if n in formula_cells:
                graph.add_edge(c, n)
    found = []
    for comp in nx.connected_components(graph):
        coords = sorted(comp, key=lambda c: (c.row, c.col))
        bbox = Rect.from_coords(coords[0], coords[0])
        for c in coords:
            bbox = bbox.union(Rect.cell(c))
        if bbox.size != len(coords) or len(coords) < 2:
            continue
        sigs = {c: fill_signature(sheet[c].ast, c) for c in coords}
        counts = Counter(sigs.values())
        if len(counts) < 2:
            continue
        # ties go to the bottom-right cell's signature: deviants sit top/left
        best = max(counts.items(), key=lambda kv: (kv[1], kv[0] == sigs[coords[-1]]))[0]
        source = next(c for c in coords if sigs[c] == best)
        found.append(FillComponent(bbox, best, source, tuple(c for c in coords if sigs[c] != best)))
    return sorted(found, key=lambda f: (f.rect.top, f.rect.left))


def check_fill_consistency(sheet: Sheet, structure: Structure) -> list[Diagnostic]:
    return [
        Diagnostic.make(
            "SPY-FILL-001",
            [Rect.cell(c) for c in comp.deviants],
            f"{len(comp.deviants)} cell(s) in {comp.rect.a1()} differ from the filled formula {comp.signature.text}",
        )
        for comp in fill_components(sheet, structure)
    ]


def check_dollaring(structure: Structure, table: DollaringRuleTable = DEFAULT_TABLE, sheet: Sheet | None = None) -> list[Diagnostic]:
    diags = []
    for block in _formula_nodes(structure):
        if not isinstance(block, Block):
            continue
        fill = FillAxis.for_shape(block.shape)
        if fill is FillAxis.NONE:
            continue
        anchor = _anchor(block)
        ast = _anchor_ast(block, sheet)
        for occ in list_references(ast):
            rect = reference_rect(occ.node)
            target = resolve_target(structure, block, rect)
            if target is None or target == "self":
                continue
            kind = target_kind(target)
            if isinstance(occ.node, Range) and _complex_on(occ.node.ref, fill):
                rng = occ.node.ref
                entries = table.complex_entries(fill, kind)
                match = table.match_complex(fill, kind, rng.start.flags, rng.end.flags)
                text = rng.render()
                if not entries:
                    diags.append(Diagnostic.make(
                        "SPY-DOLLAR-002", [block.rect],
                        f"complex reference {text} at {anchor.a1()}: not applicable when "
                        f"filling {fill.value} over a {kind.value}"))
                elif match is None:
                    diags.append(Diagnostic.make(
                        "SPY-DOLLAR-002", [block.rect],
                        f"complex reference {text} at {anchor.a1()} has the wrong dollaring for a "
                        f"cumulative {fill.value} fill over a {kind.value}"))
                elif not match.recommended:
                    diags.append(Diagnostic.make(
                        "SPY-DOLLAR-002", [block.rect],
                        f"complex reference {text} at {anchor.a1()} is not recommended for a "
                        f"{fill.value} fill over a {kind.value}", Severity.WARNING))
                continue
            allowed = table.allowed(fill, kind)
            if isinstance(occ.node, Range) and is_lookup_range(rect, target.rect, fill):
                allowed = lookup_patterns(fill)
            endpoints = (occ.node.ref,) if isinstance(occ.node, Ref) else (occ.node.ref.start, occ.node.ref.end)
            bad = [e for e in endpoints if e.flags not in allowed]
            if bad:
                shown = occ.node.ref.render()
                diags.append(Diagnostic.make(
                    "SPY-DOLLAR-001", [block.rect, target.rect],
                    f"{shown} at {anchor.a1()} will not fill correctly {fill.value}-wise "
                    f"onto {kind.value} {target.rect.a1()}"))
    return diags


def is_lookup_range(rect: Rect, target: Rect, fill: FillAxis) -> bool:
    """A range that spans the whole target along some fill axis where the target is long.

    Such ranges (``INDEX($C7:$F7, k)``) must stay put while filling rather than
    track the host cell element-wise.
    """
    for axis in fill.axes:
        lo, hi = target.span(axis)
        rlo, rhi = rect.span(axis)
        if hi > lo and rlo <= lo and rhi >= hi:
            return True
    return False


def lookup_patterns(fill: FillAxis) -> frozenset:
    col_abs = "col" in fill.axes
    row_abs = "row" in fill.axes
    return frozenset(
        (c, r) for c in (False, True) for r in (False, True)
        if (c or not col_abs) and (r or not row_abs)
    )


def _anchor_ast(block, sheet: Sheet | None) -> Node:
    from .formula import instantiate

    if sheet is not None:
        return sheet[_anchor(block)].ast
    return instantiate(block.signature, _anchor(block))


def reconcile_precedents(sheet: Sheet, structure: Structure) -> list[Diagnostic]:
    diags = []
    for node in _formula_nodes(structure):
        accessed: dict = defaultdict(set)
        orphans: list[Rect] = []
        gaps: list[Rect] = []
        own = _own_region(structure, node)
        for coord in node.rect.cells():
            ast = sheet[coord].ast
            for occ in list_references(ast):
                rect = reference_rect(occ.node)
                targets = structure.index.overlapping(rect)
                if isinstance(occ.node, Ref):
                    if structure.index.at(occ.node.ref.coord) is None:
                        orphans.append(rect)
                        continue
                elif not targets:
                    orphans.append(rect)
                    continue
                others = [t for t in targets if not any(r == t.rect for r in own)]
                if isinstance(occ.node, Range) and len(targets) >= 2:
                    clipped = [t.rect.intersection(rect) for t in targets]
                    bbox = clipped[0]
                    for r in clipped[1:]:
                        bbox = bbox.union(r)
                    if any(structure.index.at(c) is None for c in bbox.cells()):
                        gaps.append(rect)
                if any(r.intersects(rect) for r in own):
                    continue
                if isinstance(occ.node, Range) and occ.node.ref.is_complex:
                    continue
                for t in others:
                    accessed[t].update(t.rect.intersection(rect).cells())
        label = node.rect.a1()
        if orphans:
            uniq = list(dict.fromkeys(orphans))
            diags.append(Diagnostic.make(
                "SPY-REF-ORPHAN-001", [node.rect, *uniq[:8]],
                f"{label} references cells outside every block or single cell: "
                + ", ".join(r.a1() for r in uniq[:8])))
        if gaps:
            uniq = list(dict.fromkeys(gaps))
            diags.append(Diagnostic.make(
                "SPY-GAP-001", [node.rect, *uniq[:8]],
                f"{label} sums across a gap between blocks: " + ", ".join(r.a1() for r in uniq[:8])))
        for target in sorted(accessed, key=lambda t: (t.rect.top, t.rect.left)):
            missing = target.rect.size - len(accessed[target])
            if missing:
                diags.append(Diagnostic.make(
                    "SPY-REF-PARTIAL-001", [node.rect, target.rect],
                    f"{label} reads only part of {target.rect.a1()}; "
                    f"{missing} cell(s) are never accessed"))
    return diags


def layout_slices(blocks: Iterable[Block], axis: str, index: int) -> list[Block]:
    """Blocks a whole line inserted at ``index`` would cut through, if their spans differ."""
    cut = []
    for b in blocks:
        lo, hi = b.rect.span(axis)
        if lo < index <= hi:
            cut.append(b)
    spans = {b.rect.span(axis) for b in cut}
    return cut if len(spans) >= 2 else []


def check_layout(blocks: Iterable[Block], extent: Rect | None) -> list[Diagnostic]:
    if extent is None:
        return []
    blocks = list(blocks)
    diags = []
    for axis, lo, hi, name in (("row", extent.top, extent.bottom, "row"), ("col", extent.left, extent.right, "column")):
        for i in range(lo, hi + 1):
            cut = layout_slices(blocks, axis, i)
            if cut:
                where = str(i) if axis == "row" else Rect(1, i, 1, i).a1()[:-1]
                diags.append(Diagnostic.make(
                    "SPY-LAYOUT-001", [b.rect for b in cut],
                    f"inserting a whole {name} at {where} slices blocks of different sizes: "
                    + ", ".join(b.rect.a1() for b in cut)))
    return diags


def check_guards(sheet: Sheet, structure: Structure) -> list[Diagnostic]:
    diags = []
    for node in _formula_nodes(structure):
        ast = sheet[_anchor(node)].ast
        for occ in list_references(ast):
            if not isinstance(occ.node, Range) or occ.node.ref.is_complex:
                continue
            rect = occ.node.ref.rect
            target = resolve_target(structure, node, rect)
            if not isinstance(target, Block):
                continue
            t = target.rect
            for axis in ("row", "col"):
                lo, hi = t.span(axis)
                rlo, rhi = rect.span(axis)
                if hi > lo and rlo <= lo and rhi == hi:
                    where = "bottom" if axis == "row" else "right"
                    diags.append(Diagnostic.make(
                        "SPY-GUARD-001", [node.rect, rect],
                        f"{occ.node.ref.render()} in {_anchor(node).a1()} stops at the {where} edge of "
                        f"{t.a1()}; a line appended there will be missed"))
    return diags


def _constants(node: Node) -> list[float]:
    found = []
    skip = set()
    for n in walk(node):
        if isinstance(n, Percent) and isinstance(n.operand, Number):
            found.append(n.operand.value / 100)
            skip.add(id(n.operand))
        elif isinstance(n, Number) and id(n) not in skip:
            found.append(n.value)
    return found


def check_constants(blocks: Iterable[Block], allowlist: Iterable[float] = DEFAULT_CONSTANT_ALLOWLIST) -> list[Diagnostic]:
    allow = {float(a) for a in allowlist}
    diags = []
    for b in blocks:
        if b.kind is not BlockKind.FORMULA:
            continue
        odd = [v for v in _constants(b.signature.template) if v not in allow]
        if odd:
            diags.append(Diagnostic.make(
                "SPY-CONST-001", [b.rect],
                f"filled formula {b.signature.text} in {b.rect.a1()} embeds constant(s) "
                + ", ".join(f"{v:g}" for v in odd)))
    return diags


def check_self_refs(structure: Structure) -> list[Diagnostic]:
    diags = []
    for b in structure.blocks:
        if b.kind is not BlockKind.FORMULA:
            continue
        fill = FillAxis.for_shape(b.shape)
        own = _own_region(structure, b)
        hits = []
        for occ in list_references(b.signature.template):
            if not isinstance(occ.node, Ref):
                continue
            e = occ.node.ref
            prev_col = "col" in fill.axes and not e.col_abs and e.col == -1
            prev_row = "row" in fill.axes and not e.row_abs and e.row == -1
            if not (prev_col or prev_row):
                continue
            target = Rect.cell(e.from_offsets(b.rect.top_left).coord)
            if any(r.intersects(target) for r in own) or b.rect.intersects(target.translate(1 if prev_col else 0, 1 if prev_row else 0)):
                hits.append(e.render_r1c1())
        if hits:
            diags.append(Diagnostic.make(
                "SPY-SELF-001", [b.rect],
                f"{b.rect.a1()} uses previous-line reference(s) {', '.join(hits)}; "
                "re-fill required after insertion"))
    return diags


def lint(sheet: Sheet, allow_const: Iterable[float] | None = None, structure: Structure | None = None) -> list[Diagnostic]:
    """Run structure inference and every detector; stable order."""
    st = structure or infer_structure(sheet)
    diags = []
    diags += check_fill_consistency(sheet, st)
    diags += check_dollaring(st, sheet=sheet)
    diags += reconcile_precedents(sheet, st)
    diags += check_layout(st.blocks, classify_used_extent(sheet))
    diags += check_guards(sheet, st)
    diags += check_constants(st.blocks, DEFAULT_CONSTANT_ALLOWLIST if allow_const is None else allow_const)
    diags += check_self_refs(st)
    return sorted(dict.fromkeys(diags), key=lambda d: d.sort_key)


def report(diags: Iterable[Diagnostic], file: str) -> dict:
    diags = list(diags)
    return {
        "schema_version": SCHEMA_VERSION,
        "file": file,
        "diagnostics": [d.to_dict() for d in diags],
        "summary": {
            "errors": sum(d.severity is Severity.ERROR for d in diags),
            "warnings": sum(d.severity is Severity.WARNING for d in diags),
            "infos": sum(d.severity is Severity.INFO for d in diags),
        },
    }
