"""Adding an item row and a quarter column to the cost model."""

from sheetspy import Cell, CellCoord, evaluate, group_insert, infer_structure, run_crit, save_sheet
from sheetspy.resources import load_sample

sheet = load_sample("fig6")
structure = infer_structure(sheet)

# R1 links the quantities, the cumulative table, the unit costs and the cost
# block, so one call adds the third item everywhere it is needed.
bigger = group_insert(sheet, structure.group("R1"), 3, structure=structure)
print(save_sheet(bigger).decode())

# The quarter columns form C1. Inserting a column in only one of them is the
# classic mistake: the insertion test explains why.
plain = run_crit(sheet, groups=False).result("col", 9)
for reason in plain.reasons:
    print(reason.kind.value, reason.detail)

wider = group_insert(bigger, infer_structure(bigger).group("C1"), 3)

# Blank new inputs evaluate as zero, so existing totals are unchanged.
print("G14 before:", evaluate(sheet)[CellCoord.parse("G14")], " G16 after:", evaluate(wider)[CellCoord.parse("G16")])

# Until the new inputs are typed in, the checks see holes in the data blocks.
print("CRIT with blank inputs:", run_crit(wider).overall)
typed = {CellCoord.parse(a1): Cell.number(n) for a1, n in
         [("G8", 12), ("H8", 18), ("J8", 25), ("K8", 40), ("E14", 5), ("I6", 30), ("I7", 12), ("I8", 20)]}
print("CRIT with inputs filled in:", run_crit(wider.replace(typed)).overall)
