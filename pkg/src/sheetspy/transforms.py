"""Prevention transforms: sheet in, sheet out.

None of these mutate their input. Each returns a new :class:`Sheet`, and the
rewriting ones also return a change log so callers can show what was done.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .crit import InsertionEdit, simulate
from .detectors import _complex_on, fill_components, is_lookup_range, lookup_patterns, reconcile_precedents, resolve_target
from .formula import Node, Range, Ref, fill_signature, instantiate, list_references, map_references, render
from .refs import CellCoord, OutOfSheet, RangeRef, Rect
from .rules import DEFAULT_TABLE, DollaringRuleTable, FillAxis, TargetKind, fewest_flags
from .structure import Block, BlockKind, Group, SingleCell, Structure, fill_axes, infer_structure
from .workbook import Cell, Sheet, classify_used_extent

__all__ = [
    "Change",
    "GroupMisaligned",
    "ReplicationAmbiguous",
    "DestinationOccupied",
    "autofill",
    "autofill_all",
    "correct_formulas",
    "fix",
    "group_insert",
    "replicate",
    "default_destination",
]


class GroupMisaligned(ValueError):
    pass


class ReplicationAmbiguous(ValueError):
    pass


class DestinationOccupied(ValueError):
    pass


@dataclass(frozen=True)
class Change:
    """One entry of a change log. ``after`` is None for findings left alone."""

    kind: str  # fill, dollar, range, guard, skipped, insert or copy
    cells: Rect
    before: str
    after: str | None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "cells": self.cells.a1(),
            "before": self.before,
            "after": self.after,
            "detail": self.detail,
        }

    def __str__(self) -> str:
        if self.after is None:
            return f"{self.kind:7} {self.cells.a1():10} {self.before}  ({self.detail})"
        return f"{self.kind:7} {self.cells.a1():10} {self.before} -> {self.after}"


# --------------------------------------------------------------------------
# Fill
# --------------------------------------------------------------------------


def _fill(sheet: Sheet, rect: Rect, ast: Node, at: CellCoord) -> Sheet:
    sig = fill_signature(ast, at)
    updates = {}
    for c in rect.cells():
        try:
            updates[c] = Cell.formula(instantiate(sig, c))
        except OutOfSheet:
            raise ValueError(f"filling {render(ast)} from {at.a1()} runs off the sheet at {c.a1()}") from None
    return sheet.replace(updates)


def autofill(sheet: Sheet, block: Rect, source: CellCoord) -> Sheet:
    """Overwrite every cell of ``block`` with the formula at ``source`` filled to it."""
    if not block.contains(source):
        raise ValueError(f"source {source.a1()} is outside {block.a1()}")
    cell = sheet.cell(source)
    if not cell.is_formula:
        raise ValueError(f"source {source.a1()} holds no formula")
    return _fill(sheet, block, cell.ast, source)


def autofill_all(sheet: Sheet, structure: Structure | None = None) -> tuple[Sheet, list[Change]]:
    """Autofill each run of adjacent formulas from its majority formula."""
    st = structure or infer_structure(sheet)
    changes = []
    for comp in fill_components(sheet, st):
        before = ", ".join(f"{c.a1()} {render(sheet[c].ast)}" for c in comp.deviants)
        sheet = autofill(sheet, comp.rect, comp.source)
        after = ", ".join(f"{c.a1()} {render(sheet[c].ast)}" for c in comp.deviants)
        changes.append(Change("fill", comp.rect, before, after))
    return sheet, changes


# --------------------------------------------------------------------------
# Formula correction
# --------------------------------------------------------------------------


def _replace_nth(ast: Node, replacements: dict[int, Node]) -> Node:
    counter = iter(range(10**9))

    def sub(ref):
        i = next(counter)
        return replacements.get(i, ref)

    return map_references(ast, sub)


def _with_span(rng: RangeRef, axis: str, lo: int, hi: int) -> RangeRef:
    """Same flags, new extent along one axis (start keeps the low end)."""
    s, e = rng.start, rng.end
    if axis == "row":
        a, b = (s, e) if s.row <= e.row else (e, s)
        a, b = a.moved_to(CellCoord(a.col, lo)), b.moved_to(CellCoord(b.col, hi))
    else:
        a, b = (s, e) if s.col <= e.col else (e, s)
        a, b = a.moved_to(CellCoord(lo, a.row)), b.moved_to(CellCoord(hi, b.row))
    return RangeRef(a, b) if (s.row <= e.row if axis == "row" else s.col <= e.col) else RangeRef(b, a)


def _line_free(sheet: Sheet, structure: Structure, rect: Rect) -> bool:
    return all(sheet.is_blank(c) and structure.index.at(c) is None for c in rect.cells())


def _node_fill(node) -> FillAxis:
    return FillAxis.for_shape(node.shape) if isinstance(node, Block) else FillAxis.NONE


def _fix_dollaring(node, occ, target, table: DollaringRuleTable):
    """The reference with allowed dollaring, or None if it is fine as is."""
    fill = _node_fill(node)
    if fill is FillAxis.NONE or target is None or target == "self":
        return None
    kind = TargetKind.for_shape(target.shape)
    allowed = table.allowed(fill, kind)
    ref = occ.node.ref
    if isinstance(occ.node, Ref):
        return None if ref.flags in allowed else ref.with_flags(*fewest_flags(allowed))
    if _complex_on(ref, fill):
        return None  # cumulative ranges are judged by the complex table only
    if is_lookup_range(ref.rect, target.rect, fill):
        allowed = lookup_patterns(fill)
    new = RangeRef(*(e if e.flags in allowed else e.with_flags(*fewest_flags(allowed)) for e in (ref.start, ref.end)))
    return None if new == ref else new


def correct_formulas(
    sheet: Sheet,
    structure: Structure | None = None,
    table: DollaringRuleTable = DEFAULT_TABLE,
) -> tuple[Sheet, list[Change]]:
    """Rewrite dollaring and covering ranges to match the blocks referenced.

    Each formula block is corrected at its top-left cell and then re-filled.
    Ranges reading part of exactly one block are widened to the whole block
    (along the axes the formula is not filled on). Ranges that stop at the far
    edge of a block gain the blank guard line after it when that line is free.
    Anything ambiguous is logged as ``skipped``.
    """
    st = structure or infer_structure(sheet)
    partial = {(d.cells[0], d.cells[1]) for d in reconcile_precedents(sheet, st) if d.code == "SPY-REF-PARTIAL-001"}
    changes: list[Change] = []
    nodes = [b for b in st.blocks if b.kind is BlockKind.FORMULA]
    nodes += [s for s in st.singles if sheet.cell(s.coord).is_formula]
    seeds = {s.region for s in st.seeds}
    out = sheet
    for node in sorted(nodes, key=lambda n: (n.rect.top, n.rect.left)):
        if node.rect in seeds:
            continue
        anchor = node.rect.top_left
        ast = sheet[anchor].ast
        fill_on = set(fill_axes(node.shape)) if isinstance(node, Block) else set()
        replacements: dict[int, Node] = {}
        for i, occ in enumerate(list_references(ast)):
            ref = occ.node.ref
            rect = occ.node.ref.rect if isinstance(occ.node, Range) else Rect.cell(ref.coord)
            target = resolve_target(st, node, rect)
            new = _fix_dollaring(node, occ, target, table)
            if new is not None:
                replacements[i] = Range(new) if isinstance(occ.node, Range) else Ref(new)
                changes.append(Change("dollar", node.rect, ref.render(), new.render(),
                                      f"in {render(ast)} at {anchor.a1()}"))
                ref = new
            if not isinstance(occ.node, Range) or target == "self" or ref.is_complex:
                continue
            overlapping = st.index.overlapping(rect)
            if (node.rect, getattr(target, "rect", None)) in partial:
                if len(overlapping) != 1 or not isinstance(target, Block) or not target.rect.contains_rect(rect):
                    changes.append(Change("skipped", node.rect, ref.render(), None,
                                          "range spans several blocks or a gap"))
                    continue
                grown = ref
                for axis in ("row", "col"):
                    if axis not in fill_on:
                        grown = _with_span(grown, axis, *target.rect.span(axis))
                if grown != ref:
                    changes.append(Change("range", node.rect, ref.render(), grown.render(),
                                          f"widened to {target.rect.a1()}"))
                    ref = grown
                    rect = ref.rect
            if not isinstance(target, Block):
                continue
            for axis in ("row", "col"):
                lo, hi = target.rect.span(axis)
                rlo, rhi = rect.span(axis)
                if not (hi > lo and rlo <= lo and rhi == hi):
                    continue
                guard = Rect(hi + 1, rect.left, hi + 1, rect.right) if axis == "row" else Rect(rect.top, hi + 1, rect.bottom, hi + 1)
                if not _line_free(sheet, st, guard):
                    changes.append(Change("skipped", node.rect, ref.render(), None,
                                          f"no blank line after {target.rect.a1()} to use as a guard"))
                    continue
                grown = _with_span(ref, axis, rlo, hi + 1)
                changes.append(Change("guard", node.rect, ref.render(), grown.render(),
                                      f"guard line {guard.a1()} added"))
                ref = grown
                rect = ref.rect
            if ref != occ.node.ref:
                replacements[i] = Range(ref)
        if replacements:
            new_ast = _replace_nth(ast, replacements)
            out = _fill(out, node.rect, new_ast, anchor)
    return out, changes


def fix(sheet: Sheet, table: DollaringRuleTable = DEFAULT_TABLE) -> tuple[Sheet, list[Change]]:
    """Autofill deviant cells, then correct dollaring and ranges."""
    sheet, changes = autofill_all(sheet)
    sheet, more = correct_formulas(sheet, table=table)
    return sheet, changes + more


# --------------------------------------------------------------------------
# Connected-group insertion
# --------------------------------------------------------------------------


def group_insert(
    sheet: Sheet,
    group: Group,
    offset: int,
    with_guard: bool = True,
    structure: Structure | None = None,
) -> Sheet:
    """Insert one line in every member of ``group`` and re-fill what grew.

    ``offset`` is 1-based within the members: ``k`` makes the new line the
    k-th of each member. ``size + 1`` appends; that lands on the guard line
    and is only allowed with ``with_guard``.
    """
    axis = "row" if group.orientation == "row" else "col"
    sizes = {m.rect.height if axis == "row" else m.rect.width for m in group.members}
    if len(sizes) != 1:
        raise GroupMisaligned(f"members of {group.id} differ in size: {sorted(sizes)}")
    size = sizes.pop()
    top = size + 1 if with_guard else size
    if not 1 <= offset <= top:
        raise ValueError(f"offset must be between 1 and {top} for group {group.id}")
    edits = {InsertionEdit(axis, m.rect.span(axis)[0] + offset - 1) for m in group.members}
    return simulate(sheet, sorted(edits), structure or infer_structure(sheet)).sheet


# --------------------------------------------------------------------------
# Replication
# --------------------------------------------------------------------------


def _bbox(rects: Sequence[Rect]) -> Rect:
    box = rects[0]
    for r in rects[1:]:
        box = box.union(r)
    return box


def default_destination(sheet: Sheet, marked: Iterable[Rect]) -> CellCoord:
    """One blank line below the used extent, in the first marked column."""
    rects = list(marked)
    extent = classify_used_extent(sheet)
    bottom = extent.bottom if extent else 0
    return CellCoord(_bbox(rects).left, bottom + 2)


def replicate(sheet: Sheet, marked: Iterable[Rect], destination: CellCoord) -> Sheet:
    """Copy the marked cells to ``destination`` (top-left of their bounding box).

    Inside the copies, references to marked cells follow them to the copy and
    references to anything else keep their target. Dollar signs play no part.
    """
    rects = list(marked)
    if not rects:
        return sheet
    box = _bbox(rects)
    dcol, drow = destination.col - box.left, destination.row - box.top
    cells = {c for r in rects for c in r.cells()}
    dest = box.translate(dcol, drow)
    clash = [c for c in dest.cells() if not sheet.is_blank(c)]
    if clash:
        raise DestinationOccupied(f"{dest.a1()} overlaps non-blank cell {clash[0].a1()}")

    def move(e):
        return e.moved_to(CellCoord(e.col + dcol, e.row + drow))

    def remap(ref):
        if isinstance(ref, Ref):
            return Ref(move(ref.ref)) if ref.ref.coord in cells else ref
        inside = [c in cells for c in ref.ref.rect.cells()]
        if all(inside):
            return Range(RangeRef(move(ref.ref.start), move(ref.ref.end)))
        if any(inside):
            raise ReplicationAmbiguous(f"{ref.ref.render()} is only partly inside the marked cells")
        return ref

    updates = {}
    for c in sorted(cells, key=lambda c: (c.row, c.col)):
        cell = sheet.cell(c)
        if cell.is_formula:
            cell = Cell.formula(map_references(cell.ast, remap))
        updates[CellCoord(c.col + dcol, c.row + drow)] = cell
    return sheet.replace(updates)
