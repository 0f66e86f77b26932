"""Relative/absolute ("dollaring") rule tables.

Patterns are ``(col_abs, row_abs)`` pairs checked per reference endpoint.
The normal table says which patterns keep a filled formula pointing at the
intended target; the complex table covers ranges whose endpoints differ so
that the range grows as it is filled (cumulative sums).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

from .structure import Shape

Pattern = tuple  # (col_abs, row_abs)

ANY = frozenset({(False, False), (False, True), (True, False), (True, True)})


class FillAxis(enum.Enum):
    NONE = "none"
    ROW = "row"  # filled across a single row
    COLUMN = "column"  # filled down a single column
    BOTH = "both"

    @property
    def axes(self) -> tuple[str, ...]:
        """Coordinate axes that change under this fill."""
        return {"none": (), "row": ("col",), "column": ("row",), "both": ("col", "row")}[self.value]

    @classmethod
    def for_shape(cls, shape: Shape) -> "FillAxis":
        return {
            Shape.SINGLE_CELL: cls.NONE,
            Shape.SINGLE_ROW: cls.ROW,
            Shape.SINGLE_COLUMN: cls.COLUMN,
            Shape.MULTI: cls.BOTH,
        }[shape]


class TargetKind(enum.Enum):
    SINGLE_CELL = "single-cell"
    SINGLE_ROW_BLOCK = "single-row-block"
    SINGLE_COLUMN_BLOCK = "single-column-block"
    MULTI_BLOCK = "multi-block"

    @classmethod
    def for_shape(cls, shape: Shape) -> "TargetKind":
        return {
            Shape.SINGLE_CELL: cls.SINGLE_CELL,
            Shape.SINGLE_ROW: cls.SINGLE_ROW_BLOCK,
            Shape.SINGLE_COLUMN: cls.SINGLE_COLUMN_BLOCK,
            Shape.MULTI: cls.MULTI_BLOCK,
        }[shape]


def _col(abs_: bool) -> frozenset:
    return frozenset({(abs_, False), (abs_, True)})


def _row(abs_: bool) -> frozenset:
    return frozenset({(False, abs_), (True, abs_)})


R, C = FillAxis.ROW, FillAxis.COLUMN
SC, SR, SCOL, MB = (
    TargetKind.SINGLE_CELL,
    TargetKind.SINGLE_ROW_BLOCK,
    TargetKind.SINGLE_COLUMN_BLOCK,
    TargetKind.MULTI_BLOCK,
)

NORMAL = {
    **{(FillAxis.NONE, k): ANY for k in TargetKind},
    (R, SC): _col(True),
    (R, SR): _col(False),
    (R, SCOL): _col(True),
    (R, MB): _col(False),
    (C, SC): _row(True),
    (C, SR): _row(True),
    (C, SCOL): _row(False),
    (C, MB): _row(False),
    (FillAxis.BOTH, SC): frozenset({(True, True)}),
    (FillAxis.BOTH, SR): frozenset({(False, True)}),
    (FillAxis.BOTH, SCOL): frozenset({(True, False)}),
    (FillAxis.BOTH, MB): frozenset({(False, False)}),
}


class ComplexEntry(NamedTuple):
    start: frozenset
    end: frozenset
    recommended: bool


COMPLEX = {
    (R, SR): (ComplexEntry(_col(True), _col(False), True),),
    (R, MB): (ComplexEntry(_col(True), _col(False), False),),
    (C, SCOL): (ComplexEntry(_row(True), _row(False), True),),
    (C, MB): (ComplexEntry(_row(True), _row(False), False),),
    (FillAxis.BOTH, MB): (
        ComplexEntry(frozenset({(True, False)}), frozenset({(False, False)}), True),
        ComplexEntry(frozenset({(False, True)}), frozenset({(False, False)}), True),
    ),
}


@dataclass(frozen=True)
class DollaringRuleTable:
    normal: dict = field(default_factory=lambda: dict(NORMAL))
    complex: dict = field(default_factory=lambda: dict(COMPLEX))

    def allowed(self, fill: FillAxis, kind: TargetKind) -> frozenset:
        return self.normal[(fill, kind)]

    def complex_entries(self, fill: FillAxis, kind: TargetKind) -> tuple[ComplexEntry, ...]:
        """Empty tuple means "not applicable"."""
        if fill is FillAxis.NONE:
            return (ComplexEntry(ANY, ANY, True),)
        return self.complex.get((fill, kind), ())

    def match_complex(self, fill: FillAxis, kind: TargetKind, start: Pattern, end: Pattern) -> ComplexEntry | None:
        for entry in self.complex_entries(fill, kind):
            if start in entry.start and end in entry.end:
                return entry
        return None


def fewest_flags(allowed: frozenset) -> Pattern:
    """Preferred rewrite target: fewest absolute flags, column before row."""
    return min(allowed, key=lambda p: (p[0] + p[1], not p[0]))


DEFAULT_TABLE = DollaringRuleTable()
