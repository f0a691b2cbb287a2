"""Editable prompt templates with {name} placeholders."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

_OVERRIDE_DIR: Path | None = None


def set_override_dir(path: str | Path | None) -> None:
    """Point template loading at a directory of replacement .txt files."""
    global _OVERRIDE_DIR
    _OVERRIDE_DIR = Path(path) if path else None


def load(name: str) -> str:
    if _OVERRIDE_DIR is not None:
        candidate = _OVERRIDE_DIR / f"{name}.txt"
        if candidate.exists():
            return candidate.read_text()
    return resources.files(__package__).joinpath(f"{name}.txt").read_text()


def fill(template: str, **values) -> str:
    """Substitute {name} placeholders, leaving unknown braces untouched."""
    def repl(m: re.Match) -> str:
        key = m.group(1)
        return str(values[key]) if key in values else m.group(0)

    return re.sub(r"\{(\w+)\}", repl, template)
