import sys

import numpy as np
import pytest

from semigroup_lab.grid import GridSpec
from semigroup_lab.symbol import SymbolSpec

CATALOG = {
    "constant": SymbolSpec.constant(2.0),
    "affine": SymbolSpec.affine(1.0, 1.0),
    "reciprocal-affine": SymbolSpec.reciprocal_affine(),
    "moebius-0.5": SymbolSpec.moebius(0.5),
    "moebius-2": SymbolSpec.moebius(2.0),
    "log-shift": SymbolSpec.log_shift(),
    "exp-1": SymbolSpec.exp(1.0),
    "exp-minus-1": SymbolSpec.exp(-1.0),
    "two-minus-exp": SymbolSpec.two_minus_exp(),
    "sqrt-affine": SymbolSpec.sqrt_affine(),
}


@pytest.fixture
def grid():
    """Desk-scale grid: h = 0.25 on [0, 64)."""
    return GridSpec.from_extent(0.25, 64.0)


@pytest.fixture
def small_grid():
    """n = 64 grid for dense-oracle checks."""
    return GridSpec(0.25, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
