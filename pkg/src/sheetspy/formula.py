"""Formula parsing, canonical rendering and R1C1 fill signatures.

The grammar is the small subset that ordinary filled-formula models use:
numbers, strings, booleans, error literals, A1 cell and range references
(optionally sheet-qualified), function calls and the usual operators.

>>> render(parse("=sum( c3 : d4 )"))
'=SUM(C3:D4)'
>>> fill_signature(parse("=$E11*G6*(1+G$9)"), CellCoord.parse("G11")).text
'=RC5*R[-5]C*(1+R9C)'
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Union

from .refs import CellCoord, RangeRef, RefEndpoint

__all__ = [
    "FormulaSyntaxError",
    "Number",
    "Text",
    "Bool",
    "ErrorLit",
    "Ref",
    "Range",
    "SheetRef",
    "Func",
    "Binary",
    "Unary",
    "Percent",
    "Paren",
    "FillSignature",
    "ReferenceOccurrence",
    "parse",
    "render",
    "fill_signature",
    "instantiate",
    "list_references",
    "map_references",
    "walk",
]

ERROR_CODES = ("#N/A", "#REF!", "#DIV/0!", "#VALUE!", "#NAME?", "#CIRC!", "#NUM!", "#NULL!")
COMPARISONS = ("=", "<>", "<", "<=", ">", ">=")


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, coord: CellCoord | None = None):
        self.offset = offset
        self.coord = coord
        where = f"{coord.a1()}: " if coord is not None else ""
        super().__init__(f"{where}{message} at offset {offset}")

    def at(self, coord: CellCoord) -> "FormulaSyntaxError":
        return FormulaSyntaxError(str(self).split(" at offset")[0], self.offset, coord)


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Number:
    text: str

    @property
    def value(self) -> float:
        return float(self.text)


@dataclass(frozen=True)
class Text:
    value: str


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class ErrorLit:
    code: str


@dataclass(frozen=True)
class Ref:
    ref: RefEndpoint


@dataclass(frozen=True)
class Range:
    ref: RangeRef


@dataclass(frozen=True)
class SheetRef:
    """Reference into another sheet; opaque to single-sheet analysis."""

    sheet: str
    inner: Union[Ref, Range]


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Percent:
    operand: "Node"


@dataclass(frozen=True)
class Paren:
    inner: "Node"


Node = Union[Number, Text, Bool, ErrorLit, Ref, Range, SheetRef, Func, Binary, Unary, Percent, Paren]


# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<error>\#(?:N/A|REF!|DIV/0!|VALUE!|NAME\?|CIRC!|NUM!|NULL!))
  | (?P<sheet>(?:'(?:[^']|'')+'|[A-Za-z_][A-Za-z0-9_.]*)!)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<func>[A-Za-z_][A-Za-z0-9_.]*(?=\s*\())
  | (?P<ref>\$?[A-Za-z]{1,3}\$?\d+(?![A-Za-z0-9_]))
  | (?P<bool>(?:TRUE|FALSE)(?![A-Za-z0-9_]))
  | (?P<op><=|>=|<>|[-+*/^&=<>%(),:])
    """,
    re.VERBOSE | re.IGNORECASE,
)


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


def tokenize(source: str, base: int = 0) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise FormulaSyntaxError(f"unknown token {source[pos]!r}", base + pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), base + pos))
        pos = m.end()
    tokens.append(Token("end", "", base + len(source)))
    return tokens


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.kind != "op" or self.tok.text != text:
            raise FormulaSyntaxError(f"expected {text!r}", self.tok.pos)
        return self.advance()

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def parse(self) -> Node:
        node = self.comparison()
        if self.tok.kind != "end":
            raise FormulaSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def _binary_tier(self, ops: tuple, sub: Callable[[], Node]) -> Node:
        node = sub()
        while self.at_op(*ops):
            op = self.advance().text
            node = Binary(op, node, sub())
        return node

    def comparison(self) -> Node:
        return self._binary_tier(COMPARISONS, self.concat)

    def concat(self) -> Node:
        return self._binary_tier(("&",), self.additive)

    def additive(self) -> Node:
        return self._binary_tier(("+", "-"), self.multiplicative)

    def multiplicative(self) -> Node:
        return self._binary_tier(("*", "/"), self.power)

    def power(self) -> Node:
        return self._binary_tier(("^",), self.unary)

    def unary(self) -> Node:
        if self.at_op("+", "-"):
            op = self.advance().text
            return Unary(op, self.unary())
        return self.postfix()

    def postfix(self) -> Node:
        node = self.primary()
        while self.at_op("%"):
            self.advance()
            node = Percent(node)
        return node

    def reference(self) -> Union[Ref, Range]:
        t = self.advance()
        if t.kind != "ref":
            raise FormulaSyntaxError("expected a cell reference", t.pos)
        try:
            start = RefEndpoint.parse(t.text)
        except ValueError as exc:
            raise FormulaSyntaxError(str(exc), t.pos) from None
        if not self.at_op(":"):
            return Ref(start)
        self.advance()
        t2 = self.advance()
        if t2.kind != "ref":
            raise FormulaSyntaxError("bad range end", t2.pos)
        try:
            end = RefEndpoint.parse(t2.text)
        except ValueError as exc:
            raise FormulaSyntaxError(str(exc), t2.pos) from None
        return Range(RangeRef(start, end))

    def primary(self) -> Node:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Number(t.text.upper())
        if t.kind == "string":
            self.advance()
            return Text(t.text[1:-1].replace('""', '"'))
        if t.kind == "bool":
            self.advance()
            return Bool(t.text.upper() == "TRUE")
        if t.kind == "error":
            self.advance()
            return ErrorLit(t.text.upper())
        if t.kind == "ref":
            return self.reference()
        if t.kind == "sheet":
            self.advance()
            return SheetRef(t.text[:-1], self.reference())
        if t.kind == "func":
            self.advance()
            self.expect("(")
            args = []
            if not self.at_op(")"):
                args.append(self.comparison())
                while self.at_op(","):
                    self.advance()
                    args.append(self.comparison())
            self.expect(")")
            return Func(t.text.upper(), tuple(args))
        if self.at_op("("):
            self.advance()
            inner = self.comparison()
            self.expect(")")
            return Paren(inner)
        if t.kind == "end":
            raise FormulaSyntaxError("unexpected end of formula", t.pos)
        raise FormulaSyntaxError(f"unexpected {t.text!r}", t.pos)


def parse(text: str) -> Node:
    """Parse formula source text (which must start with ``=``)."""
    if not text.startswith("="):
        raise FormulaSyntaxError("formula must start with '='", 0)
    return _Parser(tokenize(text[1:], base=1)).parse()


# --------------------------------------------------------------------------
# Rendering
# --------------------------------------------------------------------------


def _render(node: Node, r1c1: bool) -> str:
    if isinstance(node, Number):
        return node.text
    if isinstance(node, Text):
        return '"' + node.value.replace('"', '""') + '"'
    if isinstance(node, Bool):
        return "TRUE" if node.value else "FALSE"
    if isinstance(node, ErrorLit):
        return node.code
    if isinstance(node, Ref):
        return node.ref.render_r1c1() if r1c1 else node.ref.render()
    if isinstance(node, Range):
        if r1c1:
            return f"{node.ref.start.render_r1c1()}:{node.ref.end.render_r1c1()}"
        return node.ref.render()
    if isinstance(node, SheetRef):
        return f"{node.sheet}!{_render(node.inner, False)}"
    if isinstance(node, Func):
        return f"{node.name}({','.join(_render(a, r1c1) for a in node.args)})"
    if isinstance(node, Binary):
        return f"{_render(node.left, r1c1)}{node.op}{_render(node.right, r1c1)}"
    if isinstance(node, Unary):
        return node.op + _render(node.operand, r1c1)
    if isinstance(node, Percent):
        return _render(node.operand, r1c1) + "%"
    if isinstance(node, Paren):
        return f"({_render(node.inner, r1c1)})"
    raise TypeError(f"not a formula node: {node!r}")


def render(node: Node) -> str:
    """Canonical A1 source, including the leading ``=``."""
    return "=" + _render(node, False)


# --------------------------------------------------------------------------
# Traversal
# --------------------------------------------------------------------------


def children(node: Node) -> tuple:
    if isinstance(node, Func):
        return node.args
    if isinstance(node, Binary):
        return (node.left, node.right)
    if isinstance(node, (Unary, Percent)):
        return (node.operand,)
    if isinstance(node, Paren):
        return (node.inner,)
    return ()


def walk(node: Node) -> Iterator[Node]:
    """Pre-order, left to right. Sheet-qualified refs are not entered."""
    yield node
    for child in children(node):
        yield from walk(child)


class ReferenceOccurrence(NamedTuple):
    node: Union[Ref, Range]
    path: tuple


def list_references(node: Node) -> list[ReferenceOccurrence]:
    """Every same-sheet cell/range reference, in source order."""
    found: list[ReferenceOccurrence] = []

    def visit(n: Node, path: tuple) -> None:
        if isinstance(n, (Ref, Range)):
            found.append(ReferenceOccurrence(n, path))
            return
        for i, child in enumerate(children(n)):
            visit(child, path + (i,))

    visit(node, ())
    return found


def map_references(node: Node, fn: Callable[[Union[Ref, Range]], Node]) -> Node:
    """Rebuild ``node`` with every same-sheet reference replaced by ``fn(ref)``."""
    if isinstance(node, (Ref, Range)):
        return fn(node)
    if isinstance(node, Func):
        return Func(node.name, tuple(map_references(a, fn) for a in node.args))
    if isinstance(node, Binary):
        return Binary(node.op, map_references(node.left, fn), map_references(node.right, fn))
    if isinstance(node, Unary):
        return Unary(node.op, map_references(node.operand, fn))
    if isinstance(node, Percent):
        return Percent(map_references(node.operand, fn))
    if isinstance(node, Paren):
        return Paren(map_references(node.inner, fn))
    return node


def map_endpoints(node: Node, fn: Callable[[RefEndpoint], RefEndpoint]) -> Node:
    def sub(ref: Union[Ref, Range]) -> Node:
        if isinstance(ref, Ref):
            return Ref(fn(ref.ref))
        return Range(RangeRef(fn(ref.ref.start), fn(ref.ref.end)))

    return map_references(node, sub)


# --------------------------------------------------------------------------
# Fill signatures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FillSignature:
    """R1C1 form of a formula relative to its host cell.

    Equality (and hashing) is on ``text`` only; ``template`` is the offset-form
    tree that :func:`instantiate` expands.
    """

    text: str
    template: Node = field(compare=False, hash=False, repr=False)

    def __str__(self) -> str:
        return self.text


def fill_signature(node: Node, at: CellCoord) -> FillSignature:
    template = map_endpoints(node, lambda e: e.to_offsets(at))
    return FillSignature("=" + _render(template, True), template)


def instantiate(sig: FillSignature, at: CellCoord) -> Node:
    """Inverse of :func:`fill_signature`; raises ``OutOfSheet`` off the grid."""
    return map_endpoints(sig.template, lambda e: e.from_offsets(at))
