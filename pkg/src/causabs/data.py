"""Binary observation tables and majority-vote table fitting."""

from __future__ import annotations

import csv
import io
import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .scm import Equation, Range


class SchemaError(ValueError):
    """Columns or rows do not match the expected layout."""


@dataclass(frozen=True)
class DataMatrix:
    columns: tuple[str, ...]
    rows: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        columns = tuple(self.columns)
        rows = tuple(tuple(r) for r in self.rows)
        if len(set(columns)) != len(columns):
            raise SchemaError(f"duplicate column names in {list(columns)}")
        for k, row in enumerate(rows):
            if len(row) != len(columns):
                raise SchemaError(f"row {k} has {len(row)} cells, expected {len(columns)}")
            bad = [x for x in row if x not in (0, 1)]
            if bad:
                raise SchemaError(f"row {k} has non-binary cells {bad}")
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[int]:
        k = self._position(name)
        return [row[k] for row in self.rows]

    def record(self, k: int) -> dict[str, int]:
        return dict(zip(self.columns, self.rows[k]))

    def records(self) -> list[dict[str, int]]:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def append(self, row: Sequence[int] | Mapping[str, int]) -> "DataMatrix":
        return DataMatrix(self.columns, self.rows + (self.conform(row),))

    def conform(self, row: Sequence[int] | Mapping[str, int]) -> tuple[int, ...]:
        """``row`` as a tuple in column order; mappings must carry exactly our columns."""
        if isinstance(row, Mapping):
            if set(row) != set(self.columns):
                raise SchemaError(f"row columns {sorted(row)} do not match {sorted(self.columns)}")
            row = [row[c] for c in self.columns]
        row = tuple(row)
        if len(row) != len(self.columns) or any(x not in (0, 1) for x in row):
            raise SchemaError(f"row {list(row)} does not fit columns {list(self.columns)}")
        return row

    def drop(self, name: str) -> "DataMatrix":
        k = self._position(name)
        return DataMatrix(
            self.columns[:k] + self.columns[k + 1:],
            tuple(row[:k] + row[k + 1:] for row in self.rows),
        )

    def select(self, names: Sequence[str]) -> "DataMatrix":
        idx = [self._position(n) for n in names]
        return DataMatrix(tuple(names), tuple(tuple(row[k] for k in idx) for row in self.rows))

    def _position(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise SchemaError(f"unknown column {name!r}") from None

    @classmethod
    def from_csv(cls, text: str) -> "DataMatrix":
        reader = csv.reader(io.StringIO(text), quoting=csv.QUOTE_NONE)
        lines = [line for line in reader if line]
        if not lines:
            raise SchemaError("CSV has no header row")
        header = [h.strip() for h in lines[0]]
        rows = []
        for n, line in enumerate(lines[1:], start=2):
            try:
                rows.append(tuple(int(cell.strip()) for cell in line))
            except ValueError:
                raise SchemaError(f"line {n}: cells must be 0 or 1, got {line}") from None
            if len(rows[-1]) != len(header):
                raise SchemaError(f"line {n}: {len(rows[-1])} cells, header has {len(header)}")
        return cls(tuple(header), tuple(rows))

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(str(x) for x in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def majority_equation(parents: Sequence[str], parent_ranges: Sequence[Range], child_range: Range,
                      observations: Iterable[tuple[tuple[int, ...], int]]) -> Equation:
    """Table mapping each parent combination to its most frequent child value.

    Ties and unseen combinations fall back to 0 (or, when 0 is not in the
    child's range, to the smallest tied value).
    """
    counts: dict[tuple[int, ...], Counter] = {}
    for key, value in observations:
        counts.setdefault(tuple(key), Counter())[value] += 1
    default = 0 if 0 in child_range else min(child_range)
    table = {}
    for key in itertools.product(*parent_ranges):
        seen = counts.get(key)
        if not seen:
            table[key] = default
            continue
        best = max(seen.values())
        tied = sorted(v for v, c in seen.items() if c == best)
        table[key] = 0 if 0 in tied else tied[0]
    return Equation(tuple(parents), table)
