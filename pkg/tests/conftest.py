import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from motion_vos.masks import Mask

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def grids(max_side=12, min_side=1):
    return st.tuples(st.integers(min_side, max_side), st.integers(min_side, max_side)).flatmap(
        lambda hw: arrays(bool, hw)
    )


def masks(max_side=12):
    return grids(max_side).map(Mask)


def mask_pairs(max_side=12):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda hw: st.tuples(arrays(bool, hw).map(Mask), arrays(bool, hw).map(Mask))
    )


def square(x0, y0, x1, y1, width, height):
    """Filled square covering x0..x1, y0..y1 inclusive."""
    cells = np.zeros((height, width), bool)
    cells[y0:y1 + 1, x0:x1 + 1] = True
    return Mask(cells)


def textured(seed, height=64, width=64):
    rng = np.random.default_rng(seed)
    noise = rng.random((height, width))
    p = np.pad(noise, 1, mode="wrap")
    out = sum(p[dy:dy + height, dx:dx + width] for dy in range(3) for dx in range(3)) / 9.0
    return (out - out.min()) / (out.max() - out.min())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
