import random

import pytest

from sheetspy.refs import CellCoord, Rect
from sheetspy.structure import BlockKind, CellRole, Shape, infer_structure, shape_of
from sheetspy.workbook import Sheet


def rects(nodes):
    return sorted(n.rect.a1() for n in nodes)


def test_fig6_blocks(sample):
    st = infer_structure(sample("fig6"))
    formula = {b.rect.a1() for b in st.blocks if b.kind is BlockKind.FORMULA}
    data = {b.rect.a1() for b in st.blocks if b.kind is BlockKind.DATA}
    assert formula == {"G4:J4", "L6:L7", "M6:P7", "G9:J9", "G11:J12", "M11:P12", "G14:J14"}
    assert data == {"G6:J7", "E11:E12"}
    assert [(s.coord.a1(), s.role) for s in st.singles] == [("E9", CellRole.CONSTANT)]


def test_text_labels_are_not_structure(sample):
    st = infer_structure(sample("fig6"))
    assert st.index.at(CellCoord.parse("B6")) is None
    assert st.index.at(CellCoord.parse("G3")) is None


def test_fig6_stripes(sample):
    st = infer_structure(sample("fig6"))
    multi = {(s.orientation, s.span): rects(s.members) for s in st.stripes if len(s.members) > 1}
    assert multi[("horizontal", (6, 7))] == ["G6:J7", "L6:L7", "M6:P7"]
    assert multi[("horizontal", (11, 12))] == ["E11:E12", "G11:J12", "M11:P12"]


def test_fig6_groups(sample):
    st = infer_structure(sample("fig6"))
    assert [(g.id, g.orientation, g.size) for g in st.groups] == [("R1", "row", 2), ("C1", "column", 4)]
    assert rects(st.group("R1").members) == ["E11:E12", "G11:J12", "G6:J7", "M11:P12", "M6:P7"]
    assert "G4:J4" in rects(st.group("C1").members)
    assert "L6:L7" not in rects(st.group("C1").members)
    assert st.group("H7").id == "R1"
    assert st.group("H7", "column").id == "C1"
    with pytest.raises(KeyError):
        st.group("items")
    with pytest.raises(KeyError):
        st.group("A1")


def test_fig6_seed(sample):
    st = infer_structure(sample("fig6"))
    assert [(s.region.a1(), s.served.rect.a1(), s.axis) for s in st.seeds] == [("L6:L7", "M6:P7", "col")]


def test_fig6_chain(sample):
    st = infer_structure(sample("fig6"))
    edges = {(a.rect.a1(), b.rect.a1()) for a, b in st.chain.edges}
    assert ("G11:J12", "G6:J7") in edges
    assert ("G11:J12", "E11:E12") in edges
    assert ("G14:J14", "G11:J12") in edges
    assert ("G9:J9", "E9") in edges
    assert ("M11:P12", "M6:P7") in edges


def test_fig5_seed_is_a_single_cell(sample):
    st = infer_structure(sample("fig5_seed"))
    assert [(s.region.a1(), s.served.rect.a1()) for s in st.seeds] == [("C4", "D4:F4")]


def test_deviant_cell_splits_block(sample):
    st = infer_structure(sample("deviant"))
    assert rects(b for b in st.blocks if b.kind is BlockKind.FORMULA) == ["C3:E3"]
    assert [s.coord.a1() for s in st.singles] == ["B3"]


def test_single_formula_is_one_off(sample):
    st = infer_structure(sample("guardless"))
    assert [(s.coord.a1(), s.role) for s in st.singles] == [("C10", CellRole.ONE_OFF_FORMULA)]


def test_empty(sample):
    st = infer_structure(sample("empty"))
    assert st.blocks == [] and st.singles == [] and st.groups == []


@pytest.mark.parametrize("a1, shape", [("A1", Shape.SINGLE_CELL), ("A1:C1", Shape.SINGLE_ROW), ("A1:A3", Shape.SINGLE_COLUMN), ("A1:B2", Shape.MULTI)])
def test_shape_of(a1, shape):
    assert shape_of(Rect.parse(a1)) == shape


@pytest.mark.parametrize("name", ["fig6", "fig4_ranges", "incremental", "gap", "deviant"])
def test_inference_ignores_cell_order(sample, name):
    s = sample(name)
    items = list(s.items())
    random.Random(7).shuffle(items)
    shuffled = Sheet(s.name, dict(items))
    a, b = infer_structure(s), infer_structure(shuffled)
    assert a.blocks == b.blocks
    assert a.singles == b.singles
    assert a.groups == b.groups
    assert a.seeds == b.seeds
    assert a.chain.edges == b.chain.edges
