import numpy as np
import pytest

from objflow.core import FEATURE_DIM, BinaryMask, Frame, InstanceCandidate


def make_candidate(cid, frame, width=32, height=32, box=(0, 0, 3, 3), feature=None,
                   objectness=1.0, mask_score=1.0):
    """Candidate whose mask is the filled inclusive box (x0, y0, x1, y1)."""
    bits = np.zeros((height, width), dtype=bool)
    x0, y0, x1, y1 = box
    bits[y0:y1 + 1, x0:x1 + 1] = True
    if feature is None:
        feature = np.zeros(FEATURE_DIM)
    return InstanceCandidate.from_mask(cid, Frame(frame), BinaryMask(bits), objectness, mask_score, feature)


def onehot(i, scale=1.0):
    v = np.zeros(FEATURE_DIM)
    v[i] = scale
    return v


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
