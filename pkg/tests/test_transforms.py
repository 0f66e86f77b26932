import pytest
from hypothesis import assume, given, settings, strategies as st

from sheetspy.crit import run_crit
from sheetspy.detectors import check_fill_consistency, lint
from sheetspy.evaluator import compare_grids, evaluate, values_equal
from sheetspy.formula import list_references, render
from sheetspy.refs import CellCoord, Rect
from sheetspy.resources import sample_names
from sheetspy.structure import Block, BlockKind, Group, infer_structure
from sheetspy.transforms import (
    DestinationOccupied,
    GroupMisaligned,
    ReplicationAmbiguous,
    autofill,
    correct_formulas,
    default_destination,
    fix,
    group_insert,
    replicate,
)
from sheetspy.workbook import Cell, Sheet, load_sheet, save_sheet

C = CellCoord.parse


def formula_at(sheet, a1):
    return render(sheet[C(a1)].ast)


# -- autofill ---------------------------------------------------------------------


def test_autofill_deviant(sample):
    s = sample("deviant")
    out = autofill(s, Rect.parse("B3:E3"), C("C3"))
    assert formula_at(out, "B3") == "=B2*2"
    assert [formula_at(out, a) for a in ("C3", "D3", "E3")] == [formula_at(s, a) for a in ("C3", "D3", "E3")]
    assert check_fill_consistency(out, infer_structure(out)) == []


def test_autofill_consistent_block_is_identity(sample):
    s = sample("fig6")
    assert autofill(s, Rect.parse("G11:J12"), C("G11")) == s


def test_autofill_is_idempotent(sample):
    s = sample("deviant")
    once = autofill(s, Rect.parse("B3:E3"), C("C3"))
    assert autofill(once, Rect.parse("B3:E3"), C("C3")) == once


def test_autofill_rejects_outside_source(sample):
    with pytest.raises(ValueError):
        autofill(sample("deviant"), Rect.parse("B3:E3"), C("A1"))


# -- correct_formulas ---------------------------------------------------------------


def test_dollar_fix_single_cell():
    s = Sheet.from_rows([[], [], [], [], ["", "", "", "", "", "", "2"], [], ["", "1", "2", "3"],
                         ["", "=B7*G5", "=C7*H5", "=D7*I5"]])
    out, log = correct_formulas(s)
    assert [formula_at(out, a) for a in ("B8", "C8", "D8")] == ["=B7*$G5", "=C7*$G5", "=D7*$G5"]
    assert [(c.kind, c.before, c.after) for c in log] == [("dollar", "G5", "$G5")]


def test_guard_added_to_sum(sample):
    s = sample("fig6")
    s = s.replace({C(f"{col}14"): load_sheet(f"=SUM({col}11:{col}12)").cell(C("A1")) for col in "GHIJ"})
    out, log = correct_formulas(s)
    assert formula_at(out, "G14") == "=SUM(G11:G13)"
    assert formula_at(out, "J14") == "=SUM(J11:J13)"
    assert [c.kind for c in log] == ["guard"]
    assert save_sheet(out) == save_sheet(sample("fig6"))


def test_canonical_fig6_has_empty_log(sample):
    out, log = correct_formulas(sample("fig6"))
    assert log == []
    assert out == sample("fig6")


def test_partial_range_widened(sample):
    out, log = correct_formulas(sample("partial"))
    assert formula_at(out, "O8") == "=SUM(K8:N10)"
    assert [c.kind for c in log] == ["range", "guard", "guard"]
    assert "SPY-REF-PARTIAL-001" not in [d.code for d in lint(out)]


def test_unfixable_guard_is_logged(sample):
    out, log = correct_formulas(sample("guardless"))
    assert out == sample("guardless")
    assert [c.kind for c in log] == ["skipped"]


def test_gap_is_left_alone(sample):
    out, _ = correct_formulas(sample("gap"))
    assert out == sample("gap")


@pytest.mark.parametrize("name", sample_names())
def test_fix_is_idempotent(sample, name):
    once, _ = fix(sample(name))
    twice, log = fix(once)
    assert save_sheet(twice) == save_sheet(once)
    assert [c for c in log if c.kind != "skipped"] == []


def test_fix_does_not_mutate_input(sample):
    s = sample("deviant")
    before = save_sheet(s)
    fix(s)
    assert save_sheet(s) == before


# -- group_insert -------------------------------------------------------------------


def preserved(before, after, mapping):
    return all(values_equal(before[c], after.get(mapping(c))) for c in before)


def test_group_insert_item_row(sample):
    s = sample("fig6")
    st_ = infer_structure(s)
    out = group_insert(s, st_.group("R1"), 3, structure=st_)
    # the new line lands at row 8 (items) and row 13 (costs); everything else moves down
    shift = lambda c: CellCoord(c.col, c.row + (c.row >= 8) + (c.row >= 13))
    assert preserved(evaluate(s), evaluate(out), shift)
    assert formula_at(out, "G14") == "=$E14*G8*(1+G$10)"
    assert formula_at(out, "G16") == "=SUM(G12:G15)"
    assert formula_at(out, "L8") == "=0"
    assert out.is_blank(C("G8")) and out.is_blank(C("E14"))
    assert check_fill_consistency(out, infer_structure(out)) == []


def test_group_insert_quarter_column(sample):
    s = sample("fig6")
    st_ = infer_structure(s)
    out = group_insert(s, st_.group("C1"), 3, structure=st_)
    shift = lambda c: CellCoord(c.col + (c.col >= 9) + (c.col >= 15), c.row)
    assert preserved(evaluate(s), evaluate(out), shift)
    assert formula_at(out, "P6") == "=O6+I6"
    assert formula_at(out, "I14") == "=SUM(I11:I13)"
    assert check_fill_consistency(out, infer_structure(out)) == []


def test_singleton_group_is_plain_insert_plus_refill(sample):
    s = sample("fig5_complex")
    st_ = infer_structure(s)
    (group,) = [g for g in st_.groups if g.orientation == "column"]
    out = group_insert(s, group, 2, structure=st_)
    assert formula_at(out, "L4") == "=SUM($J3:L3)"
    assert formula_at(out, "M4") == "=SUM($J3:M3)"


def test_group_insert_offsets(sample):
    s = sample("fig6")
    g = infer_structure(s).group("R1")
    with pytest.raises(ValueError):
        group_insert(s, g, 0)
    with pytest.raises(ValueError):
        group_insert(s, g, 3, with_guard=False)
    group_insert(s, g, 2, with_guard=False)


def test_group_misaligned():
    a = Block(Rect.parse("A1:B2"), BlockKind.DATA)
    b = Block(Rect.parse("D1:E3"), BlockKind.DATA)
    with pytest.raises(GroupMisaligned):
        group_insert(Sheet(), Group("R9", "row", (a, b)), 1)


# -- replicate ----------------------------------------------------------------------


MARK = [Rect.parse("G11:J12"), Rect.parse("E11"), Rect.parse("E12")]


def test_replicate_cost_block(sample):
    s = sample("fig6")
    out = replicate(s, MARK, C("E20"))
    assert formula_at(out, "G20") == "=$E20*G6*(1+G$9)"
    assert formula_at(out, "J21") == "=$E21*J7*(1+J$9)"
    targets = {o.node.ref.coord.a1() for o in list_references(out[C("H21")].ast)}
    assert targets == {"E21", "H7", "H9"}


def test_replicate_values_match_hand_duplicate(sample):
    s = sample("fig6")
    out = replicate(s, MARK, C("E20"))
    grid = evaluate(out)
    qty = {"G": (20, 10), "H": (35, 15), "I": (42, 22), "J": (57, 36)}
    for col, (a, b) in qty.items():
        assert grid[C(f"{col}20")] == pytest.approx(4 * a * 1.175)
        assert grid[C(f"{col}21")] == pytest.approx(6 * b * 1.175)
    # editing the copied unit cost changes only the copy
    edited = evaluate(out.replace({C("E20"): Cell.number(10.0)}))
    assert edited[C("G20")] == pytest.approx(10 * 20 * 1.175)
    assert edited[C("G11")] == grid[C("G11")]


def test_copy_paste_would_point_at_stale_inputs(sample):
    """Plain copy-paste translates relative references; replicate keeps unmarked targets."""
    from sheetspy.formula import fill_signature, instantiate

    s = sample("fig6")
    pasted = instantiate(fill_signature(s[C("G11")].ast, C("G11")), C("G20"))
    assert render(pasted) == "=$E20*G15*(1+G$9)"  # reads a blank block
    assert formula_at(replicate(s, MARK, C("E20")), "G20") == "=$E20*G6*(1+G$9)"


def test_replicate_errors(sample):
    s = sample("fig6")
    with pytest.raises(DestinationOccupied):
        replicate(s, MARK, C("E12"))
    with pytest.raises(ReplicationAmbiguous):
        replicate(s, [Rect.parse("G14:J14"), Rect.parse("G11:J11")], C("G20"))


def test_replicate_nothing_is_identity(sample):
    s = sample("fig6")
    assert replicate(s, [], C("A30")) == s


def test_default_destination(sample):
    assert default_destination(sample("fig6"), MARK) == C("E16")


@st.composite
def small_models(draw):
    """Inputs in A1:C2 and formulas in A4:C5 reading inputs and a rate in E1."""
    rows = [[str(draw(st.integers(0, 9))) for _ in range(3)] for _ in range(2)]
    rows[0] += ["", str(draw(st.integers(1, 5)))]
    rows += [[]]
    for r in (1, 2):
        rows.append([f"=A{r}*$E$1+{draw(st.sampled_from(['B', 'C']))}{r}",
                     f"=B{r}*$E$1+SUM(A{r}:C{r})", f"=C{r}*$E$1"])
    return Sheet.from_rows(rows)


@settings(max_examples=60, deadline=None)
@given(small_models(), st.booleans(), st.booleans())
def test_replication_oracle(sheet, mark_inputs, mark_rate):
    """Copies evaluate like a duplicate built by copying the marked inputs by hand."""
    marked = [Rect.parse("A4:C5")]
    if mark_inputs:
        marked.append(Rect.parse("A1:C2"))
    if mark_rate:
        marked.append(Rect.parse("E1"))
    out = replicate(sheet, marked, CellCoord(1, 10) if len(marked) > 1 else CellCoord(1, 13))
    grid = evaluate(out)
    base = evaluate(sheet)
    box = marked[0]
    for r in marked[1:]:
        box = box.union(r)
    dc, dr = 1 - box.left, (10 if len(marked) > 1 else 13) - box.top
    for c in Rect.parse("A4:C5").cells():
        assert values_equal(grid[CellCoord(c.col + dc, c.row + dr)], base[c])
