import numpy as np
import pytest

from rswmaxwell.grid import Grid


def rel(a, b):
    """Max-norm of a - b relative to the larger of the two."""
    scale = max(np.abs(a).max(), np.abs(b).max())
    return 0.0 if scale == 0 else float(np.abs(a - b).max() / scale)


def rel2(a, b):
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / nb) if nb else float(np.linalg.norm(a))


def plane(grid, k, amp):
    """``amp[:, None...] * exp(i k.r)`` on ``grid``."""
    x, y, z = grid.coords
    amp = np.asarray(amp, dtype=complex)
    return amp[:, None, None, None] * np.exp(1j * (k[0] * x + k[1] * y + k[2] * z))


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def g12():
    return Grid((12, 12, 12))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
