import pytest

from sheetspy.evaluator import Error, compare_grids, evaluate, format_value, values_equal
from sheetspy.refs import CellCoord
from sheetspy.workbook import Sheet


def at(grid, a1):
    return grid[CellCoord.parse(a1)]


def test_fig6_totals(sample):
    grid = evaluate(sample("fig6"))
    # hand oracle: G14 = (20*4 + 10*6) * 1.175 and so on per quarter
    qty = {"G": (20, 10), "H": (35, 15), "I": (42, 22), "J": (57, 36)}
    for col, (a, b) in qty.items():
        expected = (a * 4 + b * 6) * 1.175
        assert at(grid, f"{col}14") == pytest.approx(expected, rel=1e-12)
        assert at(grid, f"{col}4") == pytest.approx(expected, rel=1e-12)


def test_fig6_cumulative_and_percent(sample):
    grid = evaluate(sample("fig6"))
    assert [at(grid, f"{c}6") for c in "MNOP"] == [20, 55, 97, 154]
    assert at(grid, "M11") == Error("#N/A")
    assert at(grid, "N11") == pytest.approx(35 / 20)
    assert at(grid, "O11") == pytest.approx(42 / 55)
    assert at(grid, "P11") == pytest.approx(57 / 97)


@pytest.mark.parametrize("name", ["fig5_seed", "fig5_complex"])
def test_fig5_cumulation(sample, name):
    grid = evaluate(sample(name))
    row = [v for c, v in sorted(grid.items(), key=lambda kv: kv[0].col) if c.row == 4 and isinstance(v, float)]
    assert row[-3:] == [20, 65, 85]


@pytest.mark.parametrize(
    "formula, expected",
    [
        ("=1+2*3", 7.0),
        ("=2^3^2", 64.0),
        ("=-2^2", 4.0),
        ("=50%", 0.5),
        ('="a"&1&TRUE', "a1TRUE"),
        ("=1/0", Error("#DIV/0!")),
        ('=1+"x"', Error("#VALUE!")),
        ('=1+"2"', 3.0),
        ("=IF(1>2,10,20)", 20.0),
        ("=IF(FALSE,1)", False),
        ("=SUM(1,2,3)", 6.0),
        ("=#N/A+1", Error("#N/A")),
        ('="abc"="ABC"', True),
        ("=FOO(1)", Error("#NAME?")),
        ("=Other!A1", Error("#REF!")),
        ("=IF(#N/A,1,2)", Error("#N/A")),
    ],
)
def test_scalar_formulas(sheet_from, formula, expected):
    text = formula.replace('"', '""')
    grid = evaluate(sheet_from(f'"{text}"'))
    assert at(grid, "A1") == expected


def test_ranges_and_lookups():
    s = Sheet.from_rows([
        ["1", "2", "3"],
        ["4", "x", "6"],
        ["=SUM(A1:C2)", "=INDEX(A1:C2,2,3)", "=INDEX(A1:C1,2)", "=COLUMNS(A1:C2)", "=ROWS(A1:C2)",
         "=INDEX(A1:C1,5)", "=A1:B1"],
    ])
    grid = evaluate(s)
    assert [at(grid, a) for a in ("A3", "B3", "C3", "D3", "E3")] == [16.0, 6.0, 2.0, 3.0, 2.0]
    assert at(grid, "F3") == Error("#REF!")
    assert at(grid, "G3") == Error("#VALUE!")


def test_blank_cells_are_zero(sheet_from):
    grid = evaluate(sheet_from("=B1+1,,=SUM(B1:B9)\n"))
    assert at(grid, "A1") == 1.0
    assert at(grid, "C1") == 0.0


def test_cycles_are_circ(sheet_from):
    grid = evaluate(sheet_from("=B1,=A1,=A1+1,=C1\n=A2\n"))
    assert at(grid, "A1") == Error("#CIRC!")
    assert at(grid, "B1") == Error("#CIRC!")
    assert at(grid, "A2") == Error("#CIRC!")
    # downstream of a cycle sees the error value, it is not itself on the cycle
    assert at(grid, "C1") == Error("#CIRC!")


def test_evaluation_ignores_cell_order(sheet_from):
    a = evaluate(sheet_from("=B1*2,=C1+1,5\n"))
    assert at(a, "A1") == 12.0


def test_values_equal_tolerance():
    assert values_equal(1.0, 1.0 + 1e-12)
    assert not values_equal(1.0, 1.001)
    assert not values_equal(1.0, True)
    assert values_equal(Error("#N/A"), Error("#N/A"))
    assert compare_grids({CellCoord(1, 1): 1.0}, {CellCoord(1, 1): 2.0}) == [CellCoord(1, 1)]
    assert compare_grids({CellCoord(1, 1): None}, {}) == []


@pytest.mark.parametrize("v, text", [(164.5, "164.5"), (0.0, "0"), (None, ""), (True, "TRUE"), (Error("#N/A"), "#N/A"), (1 / 3, "0.333333333333")])
def test_format_value(v, text):
    assert format_value(v) == text
