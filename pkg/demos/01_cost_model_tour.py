"""Tour of the bundled quarterly cost model: values, structure and lint."""

from sheetspy import CellCoord, evaluate, infer_structure, lint
from sheetspy.resources import load_sample

sheet = load_sample("fig6")
values = evaluate(sheet)

# Totals per quarter sit in row 14 and are echoed in row 4.
for col in "GHIJ":
    print(col, values[CellCoord.parse(f"{col}14")])

# Blocks are rectangles of data or of one filled formula.
structure = infer_structure(sheet)
for block in structure.blocks:
    print(f"{block.rect.a1():10} {block.kind.value}")

# Groups are the blocks that must grow together when a line is added.
for group in structure.groups:
    print(group.id, group.orientation, [m.rect.a1() for m in group.members])

# The model is clean apart from an informational note on the cumulative row.
for d in lint(sheet):
    print(d.severity.value, d.code, d.message)
