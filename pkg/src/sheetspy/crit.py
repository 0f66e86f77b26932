"""Whole row/column insertion simulation and the insertion test.

Insertion follows target-tracking semantics: every cell at or after the new
line moves by one, and every reference endpoint whose target is at or after
the line is moved with it. A range therefore grows only when the line lands
strictly inside it; inserting directly below (or right of) its last line does
not touch it.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .evaluator import Error, evaluate, values_equal
from .formula import ErrorLit, Ref, fill_signature, instantiate, list_references, map_endpoints
from .refs import CellCoord, OutOfSheet, Rect, col_to_letters
from .structure import Block, BlockKind, Structure, infer_structure, reference_rect
from .detectors import layout_slices
from .workbook import Cell, Sheet, classify_used_extent

__all__ = [
    "InsertionEdit",
    "ReasonKind",
    "Reason",
    "PositionResult",
    "CritReport",
    "InconsistentBlock",
    "adjust_references",
    "apply_edits",
    "map_rect",
    "refill_block",
    "propagate",
    "run_crit",
    "simulate",
]


class InconsistentBlock(ValueError):
    pass


@dataclass(frozen=True, order=True)
class InsertionEdit:
    axis: str  # "row" | "col"
    index: int

    def __post_init__(self) -> None:
        if self.axis not in ("row", "col"):
            raise ValueError(f"axis must be 'row' or 'col', not {self.axis!r}")
        if self.index < 1:
            raise ValueError("insertion index must be >= 1")

    def label(self) -> str:
        return f"row {self.index}" if self.axis == "row" else f"column {col_to_letters(self.index)}"

    def shift(self, coord: CellCoord) -> CellCoord:
        if self.axis == "row":
            return CellCoord(coord.col, coord.row + 1) if coord.row >= self.index else coord
        return CellCoord(coord.col + 1, coord.row) if coord.col >= self.index else coord


def adjust_references(sheet: Sheet, edit: InsertionEdit) -> Sheet:
    """Insert one blank whole row/column, moving cells and references."""

    def move(e):
        moved = edit.shift(e.coord)
        return e if moved == e.coord else e.moved_to(moved)

    cells = {}
    for coord in sheet:
        cell = sheet[coord]
        if cell.is_formula:
            cell = Cell.formula(map_endpoints(cell.ast, move))
        cells[edit.shift(coord)] = cell
    return Sheet(sheet.name, cells)


def apply_edits(sheet: Sheet, edits: Iterable[InsertionEdit]) -> Sheet:
    """Apply insertions given in pre-edit coordinates (highest index first)."""
    for edit in sorted(set(edits), key=lambda e: (e.axis, -e.index)):
        sheet = adjust_references(sheet, edit)
    return sheet


def _ordered(edits: Iterable[InsertionEdit]) -> list[InsertionEdit]:
    return sorted(set(edits), key=lambda e: (e.axis, -e.index))


def grows(rect: Rect, edit: InsertionEdit, front: Iterable[str] = ()) -> bool:
    """True when the edit extends ``rect``.

    That is: the line lands inside it, or right after its last line for
    blocks at least two lines long on that axis, or (for blocks that lean on
    a seed line, listed in ``front``) right before its first line.
    """
    lo, hi = rect.span(edit.axis)
    if lo < edit.index <= hi or (edit.index == hi + 1 and hi > lo):
        return True
    return edit.axis in front and edit.index == lo


def map_rect(rect: Rect, edits: Iterable[InsertionEdit], grow: bool = True, front: Iterable[str] = ()) -> Rect:
    front = tuple(front)
    for edit in _ordered(edits):
        lo, hi = rect.span(edit.axis)
        if grow and grows(rect, edit, front):
            hi += 1
        elif lo >= edit.index:
            lo, hi = lo + 1, hi + 1
        rect = Rect(lo, rect.left, hi, rect.right) if edit.axis == "row" else Rect(rect.top, lo, rect.bottom, hi)
    return rect


def map_coord(coord: CellCoord, edits: Iterable[InsertionEdit]) -> CellCoord:
    for edit in _ordered(edits):
        coord = edit.shift(coord)
    return coord


def seed_support(structure: Structure) -> dict:
    """Formula blocks whose previous-line references land in a seed line
    directly before them: block -> {axis: seed region}."""
    support: dict = {}
    for b in structure.blocks:
        if b.kind is not BlockKind.FORMULA:
            continue
        anchor = b.rect.top_left
        for occ in list_references(b.signature.template):
            if not isinstance(occ.node, Ref):
                continue
            e = occ.node.ref
            for axis, offset, flag in (("col", e.col, e.col_abs), ("row", e.row, e.row_abs)):
                if flag or offset != -1:
                    continue
                try:
                    target = e.from_offsets(anchor).coord
                except OutOfSheet:
                    continue
                seed = structure.seed_for(target)
                if seed is None or seed.axis != axis:
                    continue
                if seed.region.span(axis)[0] == b.rect.span(axis)[0] - 1:
                    support.setdefault(b, {})[axis] = seed.region
    return support


def _damaged(sheet: Sheet, coord: CellCoord, footprint: list[Rect], edits: Sequence[InsertionEdit]) -> bool:
    """Does some edit line fall between ``coord`` and one of its targets inside ``footprint``?"""
    for occ in list_references(sheet[coord].ast):
        rect = reference_rect(occ.node)
        if not any(f.intersects(rect) for f in footprint):
            continue
        for edit in edits:
            here = coord.row if edit.axis == "row" else coord.col
            for there in rect.span(edit.axis):
                if min(here, there) < edit.index <= max(here, there):
                    return True
    return False


def refill_source(sheet: Sheet, block: Block, edits: Sequence[InsertionEdit], footprint: list[Rect]) -> CellCoord:
    """Pre-edit member to re-fill from: the first one (row-major) whose
    references into its own block or seed are not split by an edit line."""
    for c in block.rect.cells():
        if not _damaged(sheet, c, footprint, edits):
            return c
    return block.rect.top_left


def refill_block(sheet: Sheet, rect: Rect, source: CellCoord) -> Sheet:
    """Re-fill every cell of ``rect`` from the formula at ``source``."""
    cell = sheet.cell(source)
    if not cell.is_formula:
        raise InconsistentBlock(f"refill source {source.a1()} holds no formula")
    sig = fill_signature(cell.ast, source)
    updates = {}
    for c in rect.cells():
        try:
            updates[c] = Cell.formula(instantiate(sig, c))
        except OutOfSheet:
            updates[c] = Cell.formula(ErrorLit("#REF!"))
    return sheet.replace(updates)


def propagate(structure: Structure, edit: InsertionEdit, support: dict | None = None) -> list[InsertionEdit]:
    """Repeat an insertion in every stripe of each group the edit extends."""
    support = seed_support(structure) if support is None else support
    orientation = "row" if edit.axis == "row" else "column"
    groups = [g for g in structure.groups if g.orientation == orientation]
    edits = {edit}
    changed = True
    while changed:
        changed = False
        for g in groups:
            hit = [(m, e) for m in g.members for e in edits if grows(m.rect, e, support.get(m, {}))]
            for member, e in hit:
                offset = e.index - member.rect.span(edit.axis)[0]
                for other in g.members:
                    new = InsertionEdit(edit.axis, other.rect.span(edit.axis)[0] + offset)
                    if new not in edits:
                        edits.add(new)
                        changed = True
    return _ordered(edits)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


class ReasonKind(enum.Enum):
    LAYOUT_SLICE = "LayoutSlice"
    COVERAGE_MISS = "CoverageMiss"
    FILL_BREAK = "FillBreak"
    VALUE_CHANGE = "ValueChange"
    REF_ERROR = "RefError"


@dataclass(frozen=True)
class Reason:
    kind: ReasonKind
    cells: tuple[Rect, ...]
    detail: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "cells": [r.a1() for r in self.cells], "detail": self.detail}


@dataclass
class PositionResult:
    edit: InsertionEdit
    reasons: list[Reason] = field(default_factory=list)
    applied: tuple[InsertionEdit, ...] = ()

    @property
    def verdict(self) -> str:
        return "Fail" if self.reasons else "Pass"

    def to_dict(self) -> dict:
        return {
            "axis": self.edit.axis,
            "index": self.edit.index,
            "line": self.edit.label(),
            "verdict": self.verdict,
            "reasons": [r.to_dict() for r in self.reasons],
        }


@dataclass
class CritReport:
    positions: list[PositionResult]

    @property
    def overall(self) -> str:
        return "Fail" if any(p.reasons for p in self.positions) else "Pass"

    @property
    def failures(self) -> list[PositionResult]:
        return [p for p in self.positions if p.reasons]

    def result(self, axis: str, index: int) -> PositionResult:
        for p in self.positions:
            if p.edit == InsertionEdit(axis, index):
                return p
        raise KeyError((axis, index))

    def to_dict(self) -> dict:
        return {
            "schema_version": "1",
            "positions": [p.to_dict() for p in self.positions],
            "overall": self.overall,
        }


# --------------------------------------------------------------------------
# The test
# --------------------------------------------------------------------------


def _accessed(sheet: Sheet, source: Rect, target: Rect) -> set[CellCoord]:
    cells: set[CellCoord] = set()
    for coord in source.cells():
        cell = sheet.cell(coord)
        if not cell.is_formula:
            continue
        for occ in list_references(cell.ast):
            hit = reference_rect(occ.node).intersection(target)
            if hit is not None:
                cells.update(hit.cells())
    return cells


def _coverage_pairs(sheet: Sheet, structure: Structure) -> list[tuple]:
    """(source node, target block) pairs where the source reads the whole target."""
    pairs = []
    for src, dst in structure.chain.edges:
        if src == dst or not isinstance(dst, Block):
            continue
        if len(_accessed(sheet, src.rect, dst.rect)) == dst.rect.size:
            pairs.append((src, dst))
    return pairs


@dataclass
class Simulation:
    sheet: Sheet
    edits: tuple[InsertionEdit, ...]
    block_map: dict  # pre-edit Block -> post-edit Rect


def simulate(sheet: Sheet, edits: Sequence[InsertionEdit], structure: Structure | None = None, refill: bool = True) -> Simulation:
    """Apply the edits, then re-fill every formula block they extended."""
    st = structure or infer_structure(sheet)
    support = seed_support(st)
    new = apply_edits(sheet, edits)
    block_map = {b: map_rect(b.rect, edits, front=support.get(b, {})) for b in st.blocks}
    if refill:
        for b, rect in block_map.items():
            if b.kind is BlockKind.FORMULA and rect != map_rect(b.rect, edits, grow=False):
                footprint = [b.rect, *support.get(b, {}).values()]
                footprint += [s.region for s in st.seeds if s.served == b]
                source = refill_source(sheet, b, edits, footprint)
                new = refill_block(new, rect, map_coord(source, edits))
    return Simulation(new, tuple(edits), block_map)


_HARD_ERRORS = ("#REF!", "#CIRC!")


def check_position(
    sheet: Sheet,
    structure: Structure,
    edit: InsertionEdit,
    *,
    refill: bool = True,
    groups: bool = True,
    pre_values: dict | None = None,
    pairs: list | None = None,
    tol: float = 1e-9,
) -> PositionResult:
    edits = propagate(structure, edit) if groups else [edit]
    result = PositionResult(edit, applied=tuple(edits))
    reasons = result.reasons

    for e in edits:
        cut = layout_slices(structure.blocks, e.axis, e.index)
        if cut:
            reasons.append(Reason(ReasonKind.LAYOUT_SLICE, tuple(b.rect for b in cut),
                                  f"{e.label()} slices blocks of different sizes"))

    sim = simulate(sheet, edits, structure, refill=refill)
    new = sim.sheet

    for src, dst in pairs if pairs is not None else _coverage_pairs(sheet, structure):
        src_rect = sim.block_map.get(src) or map_rect(src.rect, edits, grow=False)
        dst_rect = sim.block_map[dst]
        seen = _accessed(new, src_rect, dst_rect)
        if len(seen) < dst_rect.size:
            missing = [c for c in dst_rect.cells() if c not in seen]
            detail = f"{src_rect.a1()} no longer reads all of {dst_rect.a1()}"
            if isinstance(src, Block) and sim.block_map[src] == map_rect(src.rect, edits, grow=False) \
                    and dst_rect != map_rect(dst.rect, edits, grow=False):
                detail += " (group member not extended)"
            reasons.append(Reason(ReasonKind.COVERAGE_MISS, (dst_rect, Rect.from_coords(missing[0], missing[-1])), detail))

    for b, rect in sim.block_map.items():
        if b.kind is not BlockKind.FORMULA:
            continue
        sigs = set()
        blank = False
        for c in rect.cells():
            cell = new.cell(c)
            if not cell.is_formula:
                blank = True
            else:
                sigs.add(fill_signature(cell.ast, c))
        if blank or len(sigs) > 1:
            reasons.append(Reason(ReasonKind.FILL_BREAK, (rect,),
                                  f"{rect.a1()} is no longer one filled formula"))

    before = pre_values if pre_values is not None else evaluate(sheet)
    after = evaluate(new)
    changed, broken = [], []
    origin = {}
    for coord, _ in sheet.formulas():
        moved = map_coord(coord, edits)
        origin[moved] = coord
        old, now = before.get(coord), after.get(moved)
        if isinstance(now, Error) and now.code in _HARD_ERRORS and not (isinstance(old, Error) and old.code == now.code):
            broken.append(moved)
        elif not values_equal(old, now, tol):
            changed.append(moved)
    for coord, _ in new.formulas():
        now = after.get(coord)
        if coord not in origin and isinstance(now, Error) and now.code in _HARD_ERRORS:
            broken.append(coord)
    if changed:
        reasons.append(Reason(ReasonKind.VALUE_CHANGE, tuple(Rect.cell(c) for c in changed),
                              f"{len(changed)} existing result(s) changed"))
    if broken:
        reasons.append(Reason(ReasonKind.REF_ERROR, tuple(Rect.cell(c) for c in broken),
                              f"{len(broken)} cell(s) now evaluate to #REF!/#CIRC!"))
    return result


def _line_blank(sheet: Sheet, axis: str, index: int) -> bool:
    if axis == "row":
        return not any(c.row == index for c in sheet)
    return not any(c.col == index for c in sheet)


def run_crit(
    sheet: Sheet,
    *,
    refill: bool = True,
    groups: bool = True,
    verbose: bool = False,
    tol: float = 1e-9,
) -> CritReport:
    """Try a whole-line insertion at every position within the used extent.

    ``refill=False`` leaves extended formula blocks as the raw insertion left
    them; ``groups=False`` inserts only the single line rather than repeating
    it across connected groups.
    """
    extent = classify_used_extent(sheet)
    if extent is None:
        return CritReport([])
    st = infer_structure(sheet)
    pre_values = evaluate(sheet)
    pairs = _coverage_pairs(sheet, st)
    positions = []
    for axis, last in (("row", extent.bottom), ("col", extent.right)):
        for index in range(2, last + 2):
            res = check_position(sheet, st, InsertionEdit(axis, index), refill=refill, groups=groups,
                                 pre_values=pre_values, pairs=pairs, tol=tol)
            quiet = _line_blank(sheet, axis, index) and _line_blank(sheet, axis, index - 1)
            if res.reasons or verbose or not quiet:
                positions.append(res)
    return CritReport(positions)
