"""A1 addresses, rectangles and reference endpoints."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple

_A1 = re.compile(r"^(\$?)([A-Za-z]{1,3})(\$?)([0-9]+)$")


class OutOfSheet(ValueError):
    """A reference was moved above row 1 or left of column A."""


def col_to_letters(col: int) -> str:
    if col < 1:
        raise OutOfSheet(f"column index {col} < 1")
    letters = ""
    while col:
        col, rem = divmod(col - 1, 26)
        letters = chr(65 + rem) + letters
    return letters


def letters_to_col(letters: str) -> int:
    col = 0
    for ch in letters.upper():
        col = col * 26 + (ord(ch) - 64)
    return col


class CellCoord(NamedTuple):
    col: int
    row: int

    @classmethod
    def parse(cls, text: str) -> "CellCoord":
        m = _A1.match(text.strip())
        if not m:
            raise ValueError(f"not a cell address: {text!r}")
        return cls(letters_to_col(m.group(2)), int(m.group(4)))

    def a1(self) -> str:
        return f"{col_to_letters(self.col)}{self.row}"

    def __str__(self) -> str:
        return self.a1()


def row_major(coord: CellCoord) -> tuple[int, int]:
    return (coord.row, coord.col)


class Rect(NamedTuple):
    """Inclusive rectangle, 1-based."""

    top: int
    left: int
    bottom: int
    right: int

    @classmethod
    def from_coords(cls, a: CellCoord, b: CellCoord) -> "Rect":
        return cls(min(a.row, b.row), min(a.col, b.col), max(a.row, b.row), max(a.col, b.col))

    @classmethod
    def cell(cls, c: CellCoord) -> "Rect":
        return cls(c.row, c.col, c.row, c.col)

    @classmethod
    def parse(cls, text: str) -> "Rect":
        parts = text.split(":")
        if len(parts) == 1:
            return cls.cell(CellCoord.parse(parts[0]))
        if len(parts) != 2:
            raise ValueError(f"not a range: {text!r}")
        return cls.from_coords(CellCoord.parse(parts[0]), CellCoord.parse(parts[1]))

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def size(self) -> int:
        return self.height * self.width

    @property
    def top_left(self) -> CellCoord:
        return CellCoord(self.left, self.top)

    def contains(self, c: CellCoord) -> bool:
        return self.top <= c.row <= self.bottom and self.left <= c.col <= self.right

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.top <= other.top
            and self.left <= other.left
            and other.bottom <= self.bottom
            and other.right <= self.right
        )

    def intersection(self, other: "Rect") -> "Rect | None":
        top, left = max(self.top, other.top), max(self.left, other.left)
        bottom, right = min(self.bottom, other.bottom), min(self.right, other.right)
        if top > bottom or left > right:
            return None
        return Rect(top, left, bottom, right)

    def intersects(self, other: "Rect") -> bool:
        return self.intersection(other) is not None

    def union(self, other: "Rect") -> "Rect":
        return Rect(
            min(self.top, other.top),
            min(self.left, other.left),
            max(self.bottom, other.bottom),
            max(self.right, other.right),
        )

    def translate(self, dcol: int, drow: int) -> "Rect":
        return Rect(self.top + drow, self.left + dcol, self.bottom + drow, self.right + dcol)

    def cells(self) -> Iterator[CellCoord]:
        """Row-major iteration."""
        for r in range(self.top, self.bottom + 1):
            for c in range(self.left, self.right + 1):
                yield CellCoord(c, r)

    def span(self, axis: str) -> tuple[int, int]:
        """``axis`` is "row" or "col"."""
        return (self.top, self.bottom) if axis == "row" else (self.left, self.right)

    def a1(self) -> str:
        tl = CellCoord(self.left, self.top).a1()
        if self.size == 1:
            return tl
        return f"{tl}:{CellCoord(self.right, self.bottom).a1()}"

    def __str__(self) -> str:
        return self.a1()


@dataclass(frozen=True)
class RefEndpoint:
    """One end of a reference: a target cell plus its dollar flags.

    ``col``/``row`` hold absolute sheet coordinates in A1 trees. Inside a
    fill signature the relative axes hold offsets instead (see
    :meth:`to_offsets`).
    """

    col: int
    row: int
    col_abs: bool = False
    row_abs: bool = False

    @property
    def coord(self) -> CellCoord:
        return CellCoord(self.col, self.row)

    @property
    def flags(self) -> tuple[bool, bool]:
        return (self.col_abs, self.row_abs)

    @classmethod
    def parse(cls, text: str) -> "RefEndpoint":
        m = _A1.match(text)
        if not m:
            raise ValueError(f"bad reference {text!r}")
        col, row = letters_to_col(m.group(2)), int(m.group(4))
        if row < 1 or col > 16384:
            raise ValueError(f"reference out of sheet {text!r}")
        return cls(col, row, bool(m.group(1)), bool(m.group(3)))

    def render(self) -> str:
        return (
            ("$" if self.col_abs else "")
            + col_to_letters(self.col)
            + ("$" if self.row_abs else "")
            + str(self.row)
        )

    def render_r1c1(self) -> str:
        """Render an offset-form endpoint (output of :meth:`to_offsets`)."""
        if self.row_abs:
            r = f"R{self.row}"
        else:
            r = "R" if self.row == 0 else f"R[{self.row}]"
        if self.col_abs:
            c = f"C{self.col}"
        else:
            c = "C" if self.col == 0 else f"C[{self.col}]"
        return r + c

    def to_offsets(self, at: CellCoord) -> "RefEndpoint":
        return RefEndpoint(
            self.col if self.col_abs else self.col - at.col,
            self.row if self.row_abs else self.row - at.row,
            self.col_abs,
            self.row_abs,
        )

    def from_offsets(self, at: CellCoord) -> "RefEndpoint":
        col = self.col if self.col_abs else self.col + at.col
        row = self.row if self.row_abs else self.row + at.row
        if col < 1 or row < 1:
            raise OutOfSheet(f"reference lands outside the sheet from {at.a1()}")
        return RefEndpoint(col, row, self.col_abs, self.row_abs)

    def with_flags(self, col_abs: bool, row_abs: bool) -> "RefEndpoint":
        return RefEndpoint(self.col, self.row, col_abs, row_abs)

    def moved_to(self, coord: CellCoord) -> "RefEndpoint":
        return RefEndpoint(coord.col, coord.row, self.col_abs, self.row_abs)


@dataclass(frozen=True)
class RangeRef:
    start: RefEndpoint
    end: RefEndpoint

    @property
    def is_complex(self) -> bool:
        return self.start.flags != self.end.flags

    @property
    def rect(self) -> Rect:
        return Rect.from_coords(self.start.coord, self.end.coord)

    def render(self) -> str:
        return f"{self.start.render()}:{self.end.render()}"
