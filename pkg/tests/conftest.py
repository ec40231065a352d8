import numpy as np
import pytest

from mmdnet.core import Rng
from mmdnet.kernels import Family, KernelSpec

FAMILIES = [Family.RBF, Family.LAPLACIAN, Family.RATIONAL_QUADRATIC]


@pytest.fixture
def rng():
    return Rng(12345)


@pytest.fixture(params=FAMILIES, ids=lambda f: f.value)
def family(request):
    return request.param


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-12)))


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record (and echo) one PASS/FAIL line per acceptance criterion."""
    def record(number, ok, detail):
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
