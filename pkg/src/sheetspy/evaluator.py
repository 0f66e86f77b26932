"""Deterministic evaluation of a sheet to a grid of values.

Values are plain Python objects: ``float`` numbers, ``str`` text, ``bool``,
``None`` for blank and :class:`Error` for error values. Cycles are not
iterated; every cell on a cycle evaluates to ``#CIRC!``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import networkx as nx

from .formula import (
    Binary,
    Bool,
    ErrorLit,
    Func,
    Node,
    Number,
    Paren,
    Percent,
    Range,
    Ref,
    SheetRef,
    Text,
    Unary,
    list_references,
)
from .refs import CellCoord, Rect
from .workbook import CellKind, Sheet

__all__ = ["Error", "Value", "ValueGrid", "evaluate", "evaluate_formula", "compare_grids", "format_value"]


@dataclass(frozen=True)
class Error:
    code: str

    def __str__(self) -> str:
        return self.code


NA = Error("#N/A")
REF = Error("#REF!")
DIV0 = Error("#DIV/0!")
VALUE = Error("#VALUE!")
CIRC = Error("#CIRC!")
NAME = Error("#NAME?")

Value = Union[float, str, bool, None, Error]
ValueGrid = dict  # CellCoord -> Value


class _Area:
    """A range argument: rows of values."""

    def __init__(self, rect: Rect, lookup: Callable[[CellCoord], Value]):
        self.rect = rect
        self.lookup = lookup

    def values(self):
        for coord in self.rect.cells():
            yield self.lookup(coord)

    def at(self, row: int, col: int) -> Value:
        return self.lookup(CellCoord(self.rect.left + col - 1, self.rect.top + row - 1))


class _Raise(Exception):
    def __init__(self, error: Error):
        self.error = error


def _literal_value(sheet: Sheet, coord: CellCoord) -> Value:
    cell = sheet.cell(coord)
    if cell.kind is CellKind.NUMBER:
        return cell.value
    if cell.kind is CellKind.TEXT:
        return cell.value
    if cell.kind is CellKind.ERROR:
        return Error(cell.value)
    return None


def _to_number(v: Value) -> float:
    if isinstance(v, Error):
        raise _Raise(v)
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if v is None:
        return 0.0
    if isinstance(v, float):
        return v
    try:
        return float(v)
    except ValueError:
        raise _Raise(VALUE) from None


def _to_bool(v: Value) -> bool:
    if isinstance(v, Error):
        raise _Raise(v)
    if isinstance(v, str):
        if v.upper() in ("TRUE", "FALSE"):
            return v.upper() == "TRUE"
        raise _Raise(VALUE)
    return bool(v)


def _to_text(v: Value) -> str:
    if isinstance(v, Error):
        raise _Raise(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return format_value(v)
    return v


def _type_rank(v: Value) -> int:
    return 0 if isinstance(v, float) else 1 if isinstance(v, str) else 2


def _compare(op: str, a: Value, b: Value) -> bool:
    for v in (a, b):
        if isinstance(v, Error):
            raise _Raise(v)
    if a is None:
        a = "" if isinstance(b, str) else False if isinstance(b, bool) else 0.0
    if b is None:
        b = "" if isinstance(a, str) else False if isinstance(a, bool) else 0.0
    if isinstance(a, str) and isinstance(b, str):
        a, b = a.lower(), b.lower()
    elif _type_rank(a) != _type_rank(b):
        a, b = _type_rank(a), _type_rank(b)
    return {
        "=": a == b,
        "<>": a != b,
        "<": a < b,
        "<=": a <= b,
        ">": a > b,
        ">=": a >= b,
    }[op]


def _arith(op: str, x: float, y: float) -> float:
    if op == "+":
        r = x + y
    elif op == "-":
        r = x - y
    elif op == "*":
        r = x * y
    elif op == "/":
        if y == 0:
            raise _Raise(DIV0)
        r = x / y
    else:
        try:
            r = math.pow(x, y)
        except (OverflowError, ValueError):
            raise _Raise(Error("#NUM!")) from None
    if not math.isfinite(r):
        raise _Raise(Error("#NUM!"))
    return r


class _Evaluator:
    def __init__(self, lookup: Callable[[CellCoord], Value]):
        self.lookup = lookup

    def scalar(self, node: Node) -> Value:
        v = self.eval(node)
        if isinstance(v, _Area):
            if v.rect.size == 1:
                return v.at(1, 1)
            raise _Raise(VALUE)
        return v

    def area(self, node: Node) -> _Area:
        v = self.eval(node)
        if not isinstance(v, _Area):
            raise _Raise(VALUE)
        return v

    def eval(self, node: Node):
        if isinstance(node, Number):
            return node.value
        if isinstance(node, Text):
            return node.value
        if isinstance(node, Bool):
            return node.value
        if isinstance(node, ErrorLit):
            return Error(node.code)
        if isinstance(node, Ref):
            return _Area(Rect.cell(node.ref.coord), self.lookup)
        if isinstance(node, Range):
            return _Area(node.ref.rect, self.lookup)
        if isinstance(node, SheetRef):
            raise _Raise(REF)
        if isinstance(node, Paren):
            return self.eval(node.inner)
        if isinstance(node, Percent):
            return _to_number(self.scalar(node.operand)) / 100.0
        if isinstance(node, Unary):
            x = _to_number(self.scalar(node.operand))
            return -x if node.op == "-" else x
        if isinstance(node, Binary):
            a, b = self.scalar(node.left), self.scalar(node.right)
            if node.op == "&":
                return _to_text(a) + _to_text(b)
            if node.op in ("=", "<>", "<", "<=", ">", ">="):
                return _compare(node.op, a, b)
            return _arith(node.op, _to_number(a), _to_number(b))
        if isinstance(node, Func):
            fn = _FUNCTIONS.get(node.name)
            if fn is None:
                raise _Raise(NAME)
            return fn(self, node.args)
        raise TypeError(node)


def _fn_sum(ev: _Evaluator, args) -> float:
    total = 0.0
    for arg in args:
        v = ev.eval(arg)
        items = v.values() if isinstance(v, _Area) else [v]
        for item in items:
            if isinstance(item, Error):
                raise _Raise(item)
            if isinstance(item, float):
                total += item
    return total


def _fn_if(ev: _Evaluator, args):
    if not 1 <= len(args) <= 3:
        raise _Raise(VALUE)
    if _to_bool(ev.scalar(args[0])):
        return ev.scalar(args[1]) if len(args) > 1 else True
    return ev.scalar(args[2]) if len(args) > 2 else False


def _index_arg(ev: _Evaluator, node: Node) -> int:
    k = _to_number(ev.scalar(node))
    return int(k)


def _fn_index(ev: _Evaluator, args):
    if len(args) not in (2, 3):
        raise _Raise(VALUE)
    area = ev.area(args[0])
    rect = area.rect
    if len(args) == 2:
        k = _index_arg(ev, args[1])
        if rect.height == 1:
            row, col = 1, k
        elif rect.width == 1:
            row, col = k, 1
        else:
            raise _Raise(REF)
    else:
        row, col = _index_arg(ev, args[1]), _index_arg(ev, args[2])
    if not (1 <= row <= rect.height and 1 <= col <= rect.width):
        raise _Raise(REF)
    return area.at(row, col)


def _fn_columns(ev: _Evaluator, args) -> float:
    if len(args) != 1:
        raise _Raise(VALUE)
    return float(ev.area(args[0]).rect.width)


def _fn_rows(ev: _Evaluator, args) -> float:
    if len(args) != 1:
        raise _Raise(VALUE)
    return float(ev.area(args[0]).rect.height)


_FUNCTIONS = {
    "SUM": _fn_sum,
    "IF": _fn_if,
    "INDEX": _fn_index,
    "COLUMNS": _fn_columns,
    "ROWS": _fn_rows,
}


def evaluate_formula(ast: Node, at: CellCoord, grid: Mapping[CellCoord, Value]) -> Value:
    """Evaluate one formula against already-computed values in ``grid``."""
    del at  # A1 trees carry absolute targets
    ev = _Evaluator(lambda c: grid.get(c))
    try:
        return ev.scalar(ast)
    except _Raise as exc:
        return exc.error


def _dependency_graph(sheet: Sheet) -> nx.DiGraph:
    formula_cells = [c for c, _ in sheet.formulas()]
    graph = nx.DiGraph()
    graph.add_nodes_from(formula_cells)
    for coord in formula_cells:
        for occ in list_references(sheet[coord].ast):
            rect = occ.node.ref.rect if isinstance(occ.node, Range) else Rect.cell(occ.node.ref.coord)
            if rect.size <= len(formula_cells):
                targets = (t for t in rect.cells() if t in graph)
            else:
                targets = (t for t in formula_cells if rect.contains(t))
            for target in targets:
                # edge precedent -> dependent
                graph.add_edge(target, coord)
    return graph


def evaluate(sheet: Sheet) -> ValueGrid:
    """Evaluate every non-blank cell; literal cells evaluate to themselves."""
    grid: ValueGrid = {c: _literal_value(sheet, c) for c in sheet if not sheet[c].is_formula}
    graph = _dependency_graph(sheet)
    cyclic = set()
    for comp in nx.strongly_connected_components(graph):
        if len(comp) > 1 or any(graph.has_edge(c, c) for c in comp):
            cyclic |= comp
    for c in cyclic:
        grid[c] = CIRC
    condensed = graph.copy()
    condensed.remove_nodes_from(cyclic)
    ev = _Evaluator(lambda c: grid.get(c))
    for coord in nx.lexicographical_topological_sort(condensed, key=lambda c: (c.row, c.col)):
        try:
            grid[coord] = ev.scalar(sheet[coord].ast)
        except _Raise as exc:
            grid[coord] = exc.error
    return grid


def _numbers_close(a: float, b: float, tol: float) -> bool:
    return a == b or abs(a - b) <= tol * max(abs(a), abs(b))


def values_equal(a: Value, b: Value, tol: float = 1e-9) -> bool:
    if isinstance(a, float) and isinstance(b, float) and not isinstance(a, bool) and not isinstance(b, bool):
        return _numbers_close(a, b, tol)
    return type(a) is type(b) and a == b


def compare_grids(a: Mapping[CellCoord, Value], b: Mapping[CellCoord, Value], tol: float = 1e-9) -> list[CellCoord]:
    """Coordinates whose values differ; missing coordinates count as blank."""
    diffs = [c for c in set(a) | set(b) if not values_equal(a.get(c), b.get(c), tol)]
    return sorted(diffs, key=lambda c: (c.row, c.col))


def format_value(v: Value) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        if v == 0:
            return "0"
        text = f"{v:.12g}"
        return text
    return str(v)
