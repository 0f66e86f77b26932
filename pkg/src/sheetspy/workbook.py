"""Sparse sheet model and the FML-CSV file format.

An FML-CSV file holds one sheet: CSV row *i* is sheet row *i*, field *j* is
column *j*. Fields starting with ``=`` are formulas, numbers (optionally with
a trailing ``%``) are data, ``#N/A`` style codes are error literals, a
leading apostrophe forces a text label, and anything else is a label.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .formula import ERROR_CODES, FormulaSyntaxError, Node, parse, render
from .refs import CellCoord, Rect, row_major

__all__ = [
    "CellKind",
    "Cell",
    "Sheet",
    "CsvError",
    "load_sheet",
    "save_sheet",
    "read_sheet",
    "write_sheet",
    "classify_used_extent",
    "classify_field",
]

_NUMBER = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?%?$")
LITERAL_ERRORS = ("#N/A", "#REF!", "#DIV/0!", "#VALUE!")


class CsvError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class CellKind(enum.Enum):
    BLANK = "blank"
    NUMBER = "number"
    TEXT = "text"
    ERROR = "error"
    FORMULA = "formula"


@dataclass(frozen=True)
class Cell:
    """One non-blank cell.

    ``source`` is the text written back on save: the original number lexeme,
    the canonical formula text, the error code or the label.
    """

    kind: CellKind
    value: object = None
    source: str = ""
    ast: Node | None = None

    @classmethod
    def number(cls, value: float, source: str | None = None) -> "Cell":
        return cls(CellKind.NUMBER, float(value), source if source is not None else _fmt_number(value))

    @classmethod
    def text(cls, value: str) -> "Cell":
        return cls(CellKind.TEXT, value, value)

    @classmethod
    def error(cls, code: str) -> "Cell":
        return cls(CellKind.ERROR, code, code)

    @classmethod
    def formula(cls, ast: Node) -> "Cell":
        src = render(ast)
        return cls(CellKind.FORMULA, src, src, ast)

    @property
    def is_formula(self) -> bool:
        return self.kind is CellKind.FORMULA

    @property
    def is_data(self) -> bool:
        return self.kind in (CellKind.NUMBER, CellKind.ERROR)


BLANK = Cell(CellKind.BLANK)


def _fmt_number(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def classify_field(field: str) -> Cell | None:
    """Map one CSV field to a cell; ``None`` for blank."""
    if field == "":
        return None
    if field.startswith("'"):
        rest = field[1:]
        return Cell.text(rest) if rest else None
    if field.startswith("="):
        return Cell.formula(parse(field))
    if _NUMBER.match(field):
        value = float(field[:-1]) / 100 if field.endswith("%") else float(field)
        if math.isfinite(value):
            return Cell.number(value, field)
    if field.upper() in LITERAL_ERRORS:
        return Cell.error(field.upper())
    return Cell.text(field)


class Sheet(Mapping[CellCoord, Cell]):
    """Immutable sparse grid. Absent coordinates are blank."""

    def __init__(self, name: str = "Sheet1", cells: Mapping[CellCoord, Cell] | None = None):
        self.name = name
        self._cells = {
            CellCoord(*k): v for k, v in (cells or {}).items() if v.kind is not CellKind.BLANK
        }

    def __getitem__(self, key: CellCoord) -> Cell:
        return self._cells[key]

    def __iter__(self) -> Iterator[CellCoord]:
        return iter(sorted(self._cells, key=row_major))

    def __len__(self) -> int:
        return len(self._cells)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sheet):
            return NotImplemented
        return self._cells == other._cells

    def __repr__(self) -> str:
        return f"Sheet({self.name!r}, {len(self)} cells)"

    def cell(self, coord: CellCoord) -> Cell:
        return self._cells.get(coord, BLANK)

    def is_blank(self, coord: CellCoord) -> bool:
        return coord not in self._cells

    def replace(self, updates: Mapping[CellCoord, Cell | None]) -> "Sheet":
        """New sheet with ``updates`` applied (``None`` or BLANK clears)."""
        cells = dict(self._cells)
        for coord, cell in updates.items():
            if cell is None or cell.kind is CellKind.BLANK:
                cells.pop(coord, None)
            else:
                cells[coord] = cell
        return Sheet(self.name, cells)

    def formulas(self) -> Iterator[tuple[CellCoord, Cell]]:
        for coord in self:
            cell = self._cells[coord]
            if cell.is_formula:
                yield coord, cell

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[str]], name: str = "Sheet1") -> "Sheet":
        """Build from a grid of FML-CSV field strings; row 1 first."""
        cells = {}
        for r, row in enumerate(rows, start=1):
            for c, field in enumerate(row, start=1):
                try:
                    cell = classify_field(field)
                except FormulaSyntaxError as exc:
                    raise exc.at(CellCoord(c, r)) from None
                if cell is not None:
                    cells[CellCoord(c, r)] = cell
        return cls(name, cells)


def classify_used_extent(sheet: Sheet) -> Rect | None:
    if not len(sheet):
        return None
    coords = list(sheet)
    return Rect(
        min(c.row for c in coords),
        min(c.col for c in coords),
        max(c.row for c in coords),
        max(c.col for c in coords),
    )


def load_sheet(data: bytes | str, name: str = "Sheet1") -> Sheet:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        rows = list(reader)
    except csv.Error as exc:
        raise CsvError(reader.line_num, str(exc)) from None
    return Sheet.from_rows(rows, name)


def _field_for(cell: Cell) -> str:
    if cell.kind is CellKind.TEXT:
        if cell.value.startswith(("'", "=")) or classify_field(cell.value).kind is not CellKind.TEXT:
            return "'" + cell.value
        return cell.value
    return cell.source


def save_sheet(sheet: Sheet) -> bytes:
    extent = classify_used_extent(sheet)
    if extent is None:
        return b""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for r in range(1, extent.bottom + 1):
        row = [_field_for(sheet.cell(CellCoord(c, r))) if not sheet.is_blank(CellCoord(c, r)) else ""
               for c in range(1, extent.right + 1)]
        while row and row[-1] == "":
            row.pop()
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def sheet_name_for(path: str | Path) -> str:
    name = Path(path).name
    for suffix in (".fml.csv", ".csv"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


def read_sheet(path: str | Path) -> Sheet:
    return load_sheet(Path(path).read_bytes(), sheet_name_for(path))


def write_sheet(sheet: Sheet, path: str | Path) -> None:
    Path(path).write_bytes(save_sheet(sheet))
