"""Deterministic CSV result tables.

Numbers are written with 17 significant digits, '.' decimals and '\\n' line
endings, so that repeated runs with identical seeds produce byte-identical
files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(
                f"expected {len(self.columns)} values, got {len(values)}"
            )
        self.rows.append(list(values))

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(format_value(v) for v in row))
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]
