"""
Run-off triangle ingestion and the log-Poisson design matrix.

A triangle of k origin years carries incremental payments Y_ij for the
upper-left region i + j <= k + 1 (1-based origin i, development j).

CSV format (one origin year per row, decimal point only, no thousands
separators):

  ,0,1,2,3,4                     <- optional header, detected when any field is
  2000,1120,2090,2610,2920,3130     non-numeric or the corner field is blank
  2001,1030,1920,2370,2710,
  2002,1090,2140,2610,,          <- trailing blank fields are unobserved cells
  2003,1300,2650,,,
  2004,1420,,,,

A leading label column is present when rows are one field wider than the
number of origin years.

Every vector indexed by cells (payments, residuals, fitted values) follows
cell_order(): development-major, i.e. all j=1 cells by ascending i, then j=2...
Design-matrix columns are (tau, alpha_2..alpha_k, gamma_2..gamma_k).
"""

import io
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np
import pandas as pd

from errors import EmptyInput, NonNumericCell, NonPositivePayment, RaggedShape

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------
@dataclass(frozen=True, order=True)
class CellIndex:
    i: int
    j: int
    observed: bool = True

    @classmethod
    def of(cls, i: int, j: int, k: int) -> "CellIndex":
        return cls(i, j, i + j <= k + 1)


@dataclass(frozen=True)
class RunOffTriangle:
    k: int
    cells: Mapping[tuple[int, int], float]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise EmptyInput("a run-off triangle needs at least one origin year")

        expected = {(i, j) for i in range(1, self.k + 1) for j in range(1, self.k - i + 2)}
        got = set(self.cells)
        if got != expected:
            extra = sorted(got - expected)
            missing = sorted(expected - got)
            raise RaggedShape(
                f"observed cells must be the upper-left triangle of size {self.k}; "
                f"missing={missing[:5]} unexpected={extra[:5]}"
            )

        for (i, j), value in self.cells.items():
            if not value > 0:
                raise NonPositivePayment(f"cell ({i},{j}) = {value!r}; payments must be > 0")

        if self.labels is not None and len(self.labels) != self.k:
            raise RaggedShape(f"{len(self.labels)} origin labels for {self.k} origin years")

        frozen = {(int(i), int(j)): float(v) for (i, j), v in self.cells.items()}
        object.__setattr__(self, "cells", MappingProxyType(frozen))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(lbl) for lbl in self.labels))

    @classmethod
    def from_rows(
        cls, rows: Sequence[Sequence[float]], labels: Sequence[str] | None = None
    ) -> "RunOffTriangle":
        """Build from origin-year rows; row i holds the k - i + 1 observed payments."""
        cells = {
            (i, j): value
            for i, row in enumerate(rows, start=1)
            for j, value in enumerate(row, start=1)
        }
        return cls(len(rows), cells, tuple(labels) if labels is not None else None)

    @property
    def n(self) -> int:
        return self.k * (self.k + 1) // 2

    @property
    def p(self) -> int:
        return 2 * self.k - 1

    def payments(self) -> np.ndarray:
        """Observed payments in canonical cell order."""
        return np.array([self.cells[(c.i, c.j)] for c in cell_order(self)], dtype=float)

    def origin_label(self, i: int) -> str:
        if self.labels is None:
            return str(i)
        return self.labels[i - 1]


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    values: np.ndarray
    cells: tuple[CellIndex, ...]
    columns: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------
def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_triangle(source: str) -> RunOffTriangle:
    """Parse CSV text into a validated RunOffTriangle (see module docstring)."""
    if not source.strip():
        raise EmptyInput("triangle CSV is empty")

    try:
        frame = pd.read_csv(
            io.StringIO(source),
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError as e:
        raise EmptyInput("triangle CSV has no rows") from e
    except pd.errors.ParserError as e:
        raise RaggedShape(f"rows have inconsistent field counts: {e}") from e

    grid = [[str(v).strip() if not pd.isna(v) else "" for v in row] for row in frame.to_numpy()]
    grid = [row for row in grid if any(row)]
    if not grid:
        raise EmptyInput("triangle CSV has no rows")

    first = grid[0]
    if first[0] == "" or any(f and not _is_number(f) for f in first):
        grid = grid[1:]
    if not grid:
        raise EmptyInput("triangle CSV has a header but no origin-year rows")

    k = len(grid)
    width = len(grid[0])
    if width == k + 1:
        labels: tuple[str, ...] | None = tuple(row[0] for row in grid)
        grid = [row[1:] for row in grid]
    elif width == k:
        labels = None
    else:
        raise RaggedShape(f"{k} origin-year rows but {width} columns; expected {k} or {k + 1}")

    cells: dict[tuple[int, int], float] = {}
    for i, row in enumerate(grid, start=1):
        for j, text in enumerate(row, start=1):
            observed = i + j <= k + 1
            if observed and text == "":
                raise RaggedShape(f"cell ({i},{j}) is blank inside the observed triangle")
            if not observed and text != "":
                raise RaggedShape(f"cell ({i},{j}) = {text!r} lies outside the observed triangle")
            if not observed:
                continue
            value = pd.to_numeric(text, errors="coerce")
            if pd.isna(value) or not np.isfinite(value):
                raise NonNumericCell(f"cell ({i},{j}) = {text!r} is not a finite number")
            cells[(i, j)] = float(value)

    triangle = RunOffTriangle(k, cells, labels)
    logger.info("parsed run-off triangle: k=%d, n=%d observed cells", triangle.k, triangle.n)
    return triangle


def load_triangle(path: str | Path) -> RunOffTriangle:
    return parse_triangle(Path(path).read_text(encoding="utf-8-sig"))


# ---------------------------------------------------------------------------
# Cell orderings
# ---------------------------------------------------------------------------
def cell_order(t: RunOffTriangle) -> tuple[CellIndex, ...]:
    """Observed cells, development-major: (1,1),(2,1),...,(k,1),(1,2),..."""
    return tuple(
        CellIndex(i, j, True) for j in range(1, t.k + 1) for i in range(1, t.k - j + 2)
    )


def unobserved_cells(t: RunOffTriangle) -> tuple[CellIndex, ...]:
    """Future cells i + j > k + 1, origin-major."""
    return tuple(
        CellIndex(i, j, False) for i in range(1, t.k + 1) for j in range(t.k - i + 2, t.k + 1)
    )


# ---------------------------------------------------------------------------
# Design matrix
# ---------------------------------------------------------------------------
def column_labels(k: int) -> tuple[str, ...]:
    return (
        ("tau",)
        + tuple(f"alpha_{i}" for i in range(2, k + 1))
        + tuple(f"gamma_{j}" for j in range(2, k + 1))
    )


def design_row(i: int, j: int, k: int) -> np.ndarray:
    """Indicator row of cell (i, j): intercept, alpha_i if i >= 2, gamma_j if j >= 2."""
    row = np.zeros(2 * k - 1)
    row[0] = 1.0
    if i >= 2:
        row[i - 1] = 1.0
    if j >= 2:
        row[k - 1 + j - 1] = 1.0
    return row


def build_design_matrix(t: RunOffTriangle) -> DesignMatrix:
    cells = cell_order(t)
    values = np.vstack([design_row(c.i, c.j, t.k) for c in cells])
    return DesignMatrix(values, cells, column_labels(t.k))
