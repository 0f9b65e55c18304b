import os
import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

SKIMAGE_DATA = None
try:
    import skimage

    SKIMAGE_DATA = os.path.join(os.path.dirname(skimage.__file__), "data")
except ImportError:  # pragma: no cover
    pass


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def textured_pair(h, w, d_star, seed=0):
    """Random-texture pair where left pixel x matches right pixel x - d_star."""
    r = np.random.default_rng(seed)
    texture = r.integers(0, 256, (h, w + d_star, 3), dtype=np.uint8)
    left = np.ascontiguousarray(texture[:, :w])
    right = np.ascontiguousarray(texture[:, d_star : d_star + w])
    return left, right


def motorcycle_paths():
    if SKIMAGE_DATA is None:
        return None
    paths = [os.path.join(SKIMAGE_DATA, f) for f in
             ("motorcycle_left.png", "motorcycle_right.png", "motorcycle_disp.npz")]
    return paths if all(os.path.exists(p) for p in paths) else None


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LOG = []


def record_criterion(number, status, detail):
    ACCEPTANCE_LOG.append((number, status, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_LOG, key=lambda r: (r[0], r[2])):
        terminalreporter.write_line(f"criterion {number}: {status:<4} {detail}")
