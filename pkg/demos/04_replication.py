"""Copying the cost block so the copy reads copied unit costs."""

from sheetspy import Cell, CellCoord, Rect, evaluate, replicate, save_sheet
from sheetspy.resources import load_sample

sheet = load_sample("fig6")

# Mark the cost block and the unit costs it reads. Quantities and VAT are left
# unmarked, so the copy keeps reading the originals.
marked = [Rect.parse("G11:J12"), Rect.parse("E11"), Rect.parse("E12")]
copy = replicate(sheet, marked, CellCoord.parse("E20"))
print(save_sheet(copy).decode())

# Raising a copied unit cost only moves the copied costs.
raised = copy.replace({CellCoord.parse("E20"): Cell.number(5)})
values = evaluate(raised)
print("original G11:", values[CellCoord.parse("G11")], " copy G20:", values[CellCoord.parse("G20")])
