"""
Shared fixtures: the five-year reference triangle, its fitted pipeline, and
generators for synthetic log-linear triangles.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Make scripts/ importable without installing the package
sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))

from classical_glm import fit_mle, residuals  # noqa: E402
from hybrid_fls import fit_hybrid, fuzzify, predict_fuzzy, total_reserve  # noqa: E402
from triangle import RunOffTriangle, build_design_matrix, design_row, parse_triangle  # noqa: E402

SAMPLE_ROWS = [
    [1120, 2090, 2610, 2920, 3130],
    [1030, 1920, 2370, 2710],
    [1090, 2140, 2610],
    [1300, 2650],
    [1420],
]
SAMPLE_LABELS = ["2000", "2001", "2002", "2003", "2004"]

SAMPLE_CSV = """\
,0,1,2,3,4
2000,1120,2090,2610,2920,3130
2001,1030,1920,2370,2710,
2002,1090,2140,2610,,
2003,1300,2650,,,
2004,1420,,,,
"""


def exact_triangle(k: int, beta: np.ndarray) -> RunOffTriangle:
    """Noise-free triangle Y_ij = exp(design_row(i, j) . beta)."""
    rows = [
        [float(np.exp(design_row(i, j, k) @ beta)) for j in range(1, k - i + 2)]
        for i in range(1, k + 1)
    ]
    return RunOffTriangle.from_rows(rows)


def poisson_triangle(k: int, rng: np.random.Generator) -> tuple[RunOffTriangle, np.ndarray]:
    """Log-linear means with Poisson noise; payments are kept strictly positive."""
    beta = np.concatenate(
        [
            [rng.uniform(4.5, 6.0)],
            rng.uniform(-0.4, 0.4, size=k - 1),
            rng.uniform(0.3, 1.5, size=k - 1),
        ]
    )
    rows = []
    for i in range(1, k + 1):
        mean = [np.exp(design_row(i, j, k) @ beta) for j in range(1, k - i + 2)]
        rows.append([float(max(rng.poisson(m), 1)) for m in mean])
    return RunOffTriangle.from_rows(rows), beta


@pytest.fixture(scope="session")
def sample_triangle() -> RunOffTriangle:
    return RunOffTriangle.from_rows(SAMPLE_ROWS, SAMPLE_LABELS)


@pytest.fixture(scope="session")
def sample_csv_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "triangle.csv"
    path.write_text(SAMPLE_CSV)
    return path


@pytest.fixture(scope="session")
def sample_mle(sample_triangle):
    return fit_mle(sample_triangle)


@pytest.fixture(scope="session")
def sample_residuals(sample_triangle, sample_mle):
    return residuals(sample_triangle, sample_mle)


@pytest.fixture(scope="session")
def sample_fuzzy(sample_triangle, sample_residuals):
    return fuzzify(sample_triangle, sample_residuals)


@pytest.fixture(scope="session")
def sample_design(sample_triangle):
    return build_design_matrix(sample_triangle)


@pytest.fixture(scope="session")
def sample_hybrid(sample_fuzzy, sample_design):
    return fit_hybrid(sample_fuzzy, sample_design)


@pytest.fixture(scope="session")
def sample_reserve(sample_hybrid, sample_triangle):
    return total_reserve(predict_fuzzy(sample_hybrid, sample_triangle), 1.0)


@pytest.fixture
def parsed_sample() -> RunOffTriangle:
    return parse_triangle(SAMPLE_CSV)
