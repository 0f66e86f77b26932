"""Structure-aware checks and safe edits for formula spreadsheets.

Sheets are read from FML-CSV files (one CSV row per sheet row, formulas kept
as text). From a sheet the package infers blocks of data and filled formulas,
runs detection checks, simulates whole row/column insertion, and offers
transforms that keep the structure intact.
"""

from .crit import CritReport, InsertionEdit, adjust_references, refill_block, run_crit
from .detectors import Diagnostic, Severity, lint
from .evaluator import Error, compare_grids, evaluate
from .formula import FormulaSyntaxError, fill_signature, instantiate, parse, render
from .refs import CellCoord, Rect
from .rules import DEFAULT_TABLE, DollaringRuleTable
from .structure import Structure, infer_structure
from .transforms import autofill, correct_formulas, fix, group_insert, replicate
from .workbook import Cell, CellKind, Sheet, load_sheet, read_sheet, save_sheet, write_sheet

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "CellCoord",
    "CellKind",
    "CritReport",
    "DEFAULT_TABLE",
    "Diagnostic",
    "DollaringRuleTable",
    "Error",
    "FormulaSyntaxError",
    "InsertionEdit",
    "Rect",
    "Severity",
    "Sheet",
    "Structure",
    "adjust_references",
    "autofill",
    "compare_grids",
    "correct_formulas",
    "evaluate",
    "fill_signature",
    "fix",
    "group_insert",
    "infer_structure",
    "instantiate",
    "lint",
    "load_sheet",
    "parse",
    "read_sheet",
    "refill_block",
    "render",
    "replicate",
    "run_crit",
    "save_sheet",
    "write_sheet",
]
