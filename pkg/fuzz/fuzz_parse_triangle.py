#!/usr/bin/env python3
"""
atheris harness for the run-off triangle CSV parser.

Any input must either parse into a triangle whose invariants hold or raise a
DataError. Anything else (IndexError, pandas internals leaking out, a triangle
with a non-positive payment) is a crash.

Registered in fuzz/targets.txt against scripts/triangle.py.
"""

import sys
from pathlib import Path

import atheris

with atheris.instrument_imports():
    sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))
    from errors import DataError
    from triangle import build_design_matrix, parse_triangle


def TestOneInput(data: bytes) -> None:
    fdp = atheris.FuzzedDataProvider(data)
    text = fdp.ConsumeUnicodeNoSurrogates(512)

    try:
        t = parse_triangle(text)
    except DataError:
        return

    assert t.k >= 1
    assert len(t.cells) == t.n == t.k * (t.k + 1) // 2
    assert all(v > 0 for v in t.cells.values()), "non-positive payment accepted"
    assert all(i + j <= t.k + 1 for i, j in t.cells), "cell outside the observed triangle"
    dm = build_design_matrix(t)
    assert dm.values.shape == (t.n, t.p)


if __name__ == "__main__":
    atheris.Setup(sys.argv, TestOneInput)
    atheris.Fuzz()
