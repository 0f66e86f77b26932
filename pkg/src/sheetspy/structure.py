"""Structural model of a sheet: blocks, single cells, stripes, chains, groups, seeds."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

import networkx as nx

from .formula import FillSignature, Number, Range, Ref, fill_signature, list_references
from .refs import CellCoord, Rect
from .workbook import CellKind, Sheet

__all__ = [
    "BlockKind",
    "Shape",
    "Block",
    "SingleCell",
    "Stripe",
    "Group",
    "Orphan",
    "ChainGraph",
    "SeedAnnotation",
    "Structure",
    "NodeIndex",
    "infer_blocks",
    "infer_single_cells",
    "infer_stripes",
    "build_chain_graph",
    "infer_groups",
    "detect_seeds",
    "infer_structure",
    "reference_rect",
]


class BlockKind(enum.Enum):
    DATA = "data"
    FORMULA = "formula"


class Shape(enum.Enum):
    SINGLE_ROW = "single-row"
    SINGLE_COLUMN = "single-column"
    MULTI = "multi-row-column"
    SINGLE_CELL = "single-cell"


def shape_of(rect: Rect) -> Shape:
    if rect.size == 1:
        return Shape.SINGLE_CELL
    if rect.height == 1:
        return Shape.SINGLE_ROW
    if rect.width == 1:
        return Shape.SINGLE_COLUMN
    return Shape.MULTI


@dataclass(frozen=True)
class Block:
    rect: Rect
    kind: BlockKind
    signature: FillSignature | None = None

    @property
    def shape(self) -> Shape:
        return shape_of(self.rect)

    @property
    def label(self) -> str:
        return self.rect.a1()

    def __repr__(self) -> str:
        return f"Block({self.kind.value} {self.rect.a1()})"


class CellRole(enum.Enum):
    CONSTANT = "constant"
    ONE_OFF_FORMULA = "one-off-formula"


@dataclass(frozen=True)
class SingleCell:
    coord: CellCoord
    role: CellRole

    @property
    def rect(self) -> Rect:
        return Rect.cell(self.coord)

    @property
    def shape(self) -> Shape:
        return Shape.SINGLE_CELL

    @property
    def label(self) -> str:
        return self.coord.a1()

    def __repr__(self) -> str:
        return f"SingleCell({self.role.value} {self.coord.a1()})"


StructNode = Union[Block, SingleCell]


def _node_key(node: StructNode) -> tuple:
    r = node.rect
    return (r.top, r.left, r.bottom, r.right)


@dataclass(frozen=True)
class Stripe:
    orientation: str  # "horizontal" | "vertical"
    span: tuple[int, int]
    members: tuple[Block, ...]


@dataclass(frozen=True)
class Group:
    id: str
    orientation: str  # "row" | "column"
    members: tuple[Block, ...]

    @property
    def size(self) -> int:
        """Cross-axis size shared by every member (height or width)."""
        r = self.members[0].rect
        return r.height if self.orientation == "row" else r.width


@dataclass(frozen=True)
class SeedAnnotation:
    region: Rect
    served: Block
    axis: str  # "col": seed column on the left; "row": seed row above


@dataclass(frozen=True)
class Orphan:
    source: StructNode
    cell: CellCoord
    target: Rect


@dataclass
class ChainGraph:
    graph: nx.DiGraph
    orphans: list[Orphan] = field(default_factory=list)

    @property
    def edges(self) -> list[tuple[StructNode, StructNode]]:
        return sorted(self.graph.edges(), key=lambda e: (_node_key(e[0]), _node_key(e[1])))


def reference_rect(node: Union[Ref, Range]) -> Rect:
    if isinstance(node, Range):
        return node.ref.rect
    return Rect.cell(node.ref.coord)


# --------------------------------------------------------------------------
# Blocks and single cells
# --------------------------------------------------------------------------


def _cell_keys(sheet: Sheet) -> dict[CellCoord, tuple]:
    keys = {}
    for coord in sheet:
        cell = sheet[coord]
        if cell.is_formula:
            keys[coord] = ("formula", fill_signature(cell.ast, coord))
        elif cell.is_data:
            keys[coord] = ("data",)
    return keys


def _grow(keys: dict, claimed: set, start: CellCoord) -> Rect:
    key = keys[start]

    def free(c: CellCoord) -> bool:
        return c not in claimed and keys.get(c) == key

    right = start.col
    while free(CellCoord(right + 1, start.row)):
        right += 1
    bottom = start.row
    while all(free(CellCoord(c, bottom + 1)) for c in range(start.col, right + 1)):
        bottom += 1
    return Rect(start.row, start.col, bottom, right)


def _partition(sheet: Sheet) -> tuple[list[Block], list[SingleCell]]:
    keys = _cell_keys(sheet)
    claimed: set[CellCoord] = set()
    blocks, singles = [], []
    for coord in sorted(keys, key=lambda c: (c.row, c.col)):
        if coord in claimed:
            continue
        rect = _grow(keys, claimed, coord)
        claimed.update(rect.cells())
        key = keys[coord]
        if rect.size == 1:
            role = CellRole.ONE_OFF_FORMULA if key[0] == "formula" else CellRole.CONSTANT
            singles.append(SingleCell(coord, role))
        elif key[0] == "formula":
            blocks.append(Block(rect, BlockKind.FORMULA, key[1]))
        else:
            blocks.append(Block(rect, BlockKind.DATA))
    return blocks, singles


def infer_blocks(sheet: Sheet) -> list[Block]:
    """Maximal fill-consistent formula rectangles and contiguous data rectangles.

    Growth is greedy from each unclaimed cell in row-major order, first to the
    right and then downward. 1x1 results are single cells, not blocks.
    """
    return _partition(sheet)[0]


def infer_single_cells(sheet: Sheet, blocks: Iterable[Block] | None = None) -> list[SingleCell]:
    if blocks is None:
        return _partition(sheet)[1]
    covered = {c for b in blocks for c in b.rect.cells()}
    singles = []
    for coord in sheet:
        cell = sheet[coord]
        if coord in covered or not (cell.is_formula or cell.is_data):
            continue
        role = CellRole.ONE_OFF_FORMULA if cell.is_formula else CellRole.CONSTANT
        singles.append(SingleCell(coord, role))
    return singles


# --------------------------------------------------------------------------
# Node lookup
# --------------------------------------------------------------------------


class NodeIndex:
    """Cell -> structural node lookup."""

    def __init__(self, nodes: Iterable[StructNode]):
        self.nodes = sorted(nodes, key=_node_key)
        self._at: dict[CellCoord, StructNode] = {}
        for node in self.nodes:
            for c in node.rect.cells():
                self._at[c] = node

    def at(self, coord: CellCoord) -> StructNode | None:
        return self._at.get(coord)

    def overlapping(self, rect: Rect) -> list[StructNode]:
        if rect.size <= 4 * len(self.nodes) + 16:
            seen = []
            for c in rect.cells():
                n = self._at.get(c)
                if n is not None and n not in seen:
                    seen.append(n)
            return sorted(seen, key=_node_key)
        return [n for n in self.nodes if n.rect.intersects(rect)]


# --------------------------------------------------------------------------
# Stripes, chain graph, groups, seeds
# --------------------------------------------------------------------------


def infer_stripes(blocks: Iterable[Block]) -> list[Stripe]:
    rows: dict[tuple, list] = defaultdict(list)
    cols: dict[tuple, list] = defaultdict(list)
    for b in blocks:
        rows[(b.rect.top, b.rect.bottom)].append(b)
        cols[(b.rect.left, b.rect.right)].append(b)
    stripes = [
        Stripe("horizontal", span, tuple(sorted(m, key=lambda b: (b.rect.left, b.rect.top))))
        for span, m in sorted(rows.items())
    ]
    stripes += [
        Stripe("vertical", span, tuple(sorted(m, key=lambda b: (b.rect.top, b.rect.left))))
        for span, m in sorted(cols.items())
    ]
    return stripes


def _formula_cells(sheet: Sheet, node: StructNode) -> Iterator[CellCoord]:
    for c in node.rect.cells():
        if sheet.cell(c).is_formula:
            yield c


def build_chain_graph(sheet: Sheet, blocks: Iterable[Block], singles: Iterable[SingleCell]) -> ChainGraph:
    """Edge A -> B when a formula in A references at least one cell of B."""
    nodes = list(blocks) + list(singles)
    index = NodeIndex(nodes)
    graph = nx.DiGraph()
    graph.add_nodes_from(index.nodes)
    orphans = []
    for node in index.nodes:
        for coord in _formula_cells(sheet, node):
            for occ in list_references(sheet[coord].ast):
                rect = reference_rect(occ.node)
                targets = index.overlapping(rect)
                if not targets:
                    orphans.append(Orphan(node, coord, rect))
                elif isinstance(occ.node, Ref) and index.at(occ.node.ref.coord) is None:
                    orphans.append(Orphan(node, coord, rect))
                for t in targets:
                    graph.add_edge(node, t)
    return ChainGraph(graph, orphans)


def infer_groups(chain: ChainGraph, seeds: Iterable[SeedAnnotation] = ()) -> list[Group]:
    """Chain-connected blocks of equal height (row groups) or width (column groups).

    Only extendable sizes form groups: row groups need height >= 2 and column
    groups width >= 2. Seed regions follow the block they serve and are left out.
    """
    seed_regions = {s.region for s in seeds}
    blocks = [n for n in chain.graph.nodes if isinstance(n, Block) and n.rect not in seed_regions]
    undirected = chain.graph.to_undirected()
    groups = []
    for orientation, size_of, prefix in (
        ("row", lambda b: b.rect.height, "R"),
        ("column", lambda b: b.rect.width, "C"),
    ):
        by_size = defaultdict(list)
        for b in blocks:
            if size_of(b) >= 2:
                by_size[size_of(b)].append(b)
        comps = []
        for members in by_size.values():
            sub = undirected.subgraph(members)
            for comp in nx.connected_components(sub):
                comps.append(tuple(sorted(comp, key=_node_key)))
        comps.sort(key=lambda m: _node_key(m[0]))
        groups += [Group(f"{prefix}{i}", orientation, m) for i, m in enumerate(comps, start=1)]
    return groups


def fill_axes(shape: Shape) -> tuple[str, ...]:
    """Axes along which a block of this shape is filled ("col" = across)."""
    return {
        Shape.SINGLE_ROW: ("col",),
        Shape.SINGLE_COLUMN: ("row",),
        Shape.MULTI: ("col", "row"),
        Shape.SINGLE_CELL: (),
    }[shape]


def _is_zero_seed(sheet: Sheet, coord: CellCoord) -> bool:
    cell = sheet.cell(coord)
    if cell.kind is CellKind.NUMBER:
        return cell.value == 0
    if cell.is_formula:
        return isinstance(cell.ast, Number) and cell.ast.value == 0
    return False


def detect_seeds(sheet: Sheet, blocks: Iterable[Block]) -> list[SeedAnnotation]:
    seeds = []
    for b in blocks:
        if b.kind is not BlockKind.FORMULA:
            continue
        refs = [o.node.ref for o in list_references(b.signature.template) if isinstance(o.node, Ref)]
        for axis in fill_axes(b.shape):
            if axis == "col":
                prev = any(not e.col_abs and e.col == -1 for e in refs)
                region = Rect(b.rect.top, b.rect.left - 1, b.rect.bottom, b.rect.left - 1)
            else:
                prev = any(not e.row_abs and e.row == -1 for e in refs)
                region = Rect(b.rect.top - 1, b.rect.left, b.rect.top - 1, b.rect.right)
            if not prev or region.left < 1 or region.top < 1:
                continue
            if all(_is_zero_seed(sheet, c) for c in region.cells()):
                seeds.append(SeedAnnotation(region, b, axis))
    return seeds


@dataclass
class Structure:
    """Everything inferred from one sheet."""

    blocks: list[Block]
    singles: list[SingleCell]
    stripes: list[Stripe]
    chain: ChainGraph
    groups: list[Group]
    seeds: list[SeedAnnotation]

    def __post_init__(self) -> None:
        self.index = NodeIndex(list(self.blocks) + list(self.singles))

    def seed_for(self, coord: CellCoord) -> SeedAnnotation | None:
        for s in self.seeds:
            if s.region.contains(coord):
                return s
        return None

    def block_at(self, coord: CellCoord) -> Block | None:
        node = self.index.at(coord)
        return node if isinstance(node, Block) else None

    def group(self, key: str, orientation: str | None = None) -> Group:
        """Look a group up by id (``R1``) or by any cell of a member block.

        A cell can sit in both a row and a column group; ``orientation``
        ("row" or "column") picks one, otherwise row groups come first.
        """
        groups = [g for g in self.groups if orientation is None or g.orientation == orientation]
        for g in groups:
            if g.id.upper() == key.upper():
                return g
        try:
            coord = CellCoord.parse(key)
        except ValueError:
            raise KeyError(f"no group {key!r}") from None
        for g in groups:
            if any(m.rect.contains(coord) for m in g.members):
                return g
        raise KeyError(f"no group {key!r}")


def infer_structure(sheet: Sheet) -> Structure:
    blocks, singles = _partition(sheet)
    seeds = detect_seeds(sheet, blocks)
    chain = build_chain_graph(sheet, blocks, singles)
    return Structure(
        blocks=blocks,
        singles=singles,
        stripes=infer_stripes(blocks),
        chain=chain,
        groups=infer_groups(chain, seeds),
        seeds=seeds,
    )
