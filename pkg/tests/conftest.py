import os

import numpy as np
import pytest

os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

from pnlm.corpus import half_size  # noqa: E402


def _luma(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 3:
        a = a[..., :3] @ np.array([0.299, 0.587, 0.114])
    return a


def natural(name: str, size: int) -> np.ndarray:
    """A ``size`` x ``size`` gray crop of a scikit-image sample, halved while it is at least 2x too big."""
    from skimage import data

    img = _luma(getattr(data, name)())
    while min(img.shape) >= 2 * size:
        img = half_size(img)
    return np.ascontiguousarray(img[:size, :size])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
