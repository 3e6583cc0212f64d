import sys
from fractions import Fraction
from pathlib import Path

import pytest

from mbs.exactlin import QMatrix
from mbs.mbscomplex import BoundaryBlock
from mbs.orbitdata import CriticalOrbit, GeneratorAction, ManifoldSpec
from mbs.specdoc import EXAMPLE_NAMES, SpecDocument, example_text, parse_document, serialize_document

sys.path.insert(0, str(Path(__file__).parent))


def bad_chain_document() -> SpecDocument:
    """Three circle orbits of index 0, 1, 2 with two dth1 -> dth1 blocks.

    Worked by hand: d^1 = [[-1, 0], [0, 0]], d^2 = [[-1, 0]], d^2 d^1 = [[1, 0]].
    """
    triv = GeneratorAction(1, 1)
    spec = ManifoldSpec(3, tuple(CriticalOrbit(lab, 1, i, Fraction(i), (triv,)) for i, lab in enumerate("ABC")))
    blk = QMatrix.from_rows([[0, 0], [0, 1]])
    return SpecDocument(spec, (BoundaryBlock("B", "A", blk), BoundaryBlock("C", "B", blk)), "bad-chain",
                        "inconsistent boundary data: d o d != 0")


@pytest.fixture(scope="session")
def docs():
    return {name: parse_document(example_text(name)) for name in EXAMPLE_NAMES}


@pytest.fixture
def bad_chain_path(tmp_path):
    p = tmp_path / "bad_chain.spec"
    p.write_text(serialize_document(bad_chain_document()))
    return p


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n, (ok, detail) in sorted(mod.RESULTS.items()):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  ({detail})")
