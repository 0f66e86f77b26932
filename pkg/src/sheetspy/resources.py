"""Access to the sample workbooks and JSON schemas shipped with the package."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .workbook import Sheet, read_sheet

__all__ = ["sample_names", "sample_path", "load_sample", "load_schema"]


def _root():
    return resources.files("sheetspy")


def sample_names() -> list[str]:
    return sorted(p.name.removesuffix(".fml.csv") for p in _root().joinpath("samples").iterdir() if p.name.endswith(".fml.csv"))


def sample_path(name: str) -> Path:
    """Path of a shipped sample, by stem (``"fig6"``) or file name."""
    if not name.endswith(".fml.csv"):
        name += ".fml.csv"
    path = Path(str(_root().joinpath("samples", name)))
    if not path.is_file():
        raise FileNotFoundError(f"no sample named {name!r}")
    return path


def load_sample(name: str) -> Sheet:
    return read_sheet(sample_path(name))


def load_schema(name: str) -> dict:
    """One of ``lint``, ``crit``, ``inspect``, ``eval``, ``changes``."""
    text = _root().joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
