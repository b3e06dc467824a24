import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nicd.datakit import from_arrays  # noqa: E402


def blobs(n_per_class=20, seed=0, separation=10.0, flip=()):
    """Two tight 2-D blobs; labels of the indices in ``flip`` are swapped."""
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-separation / 2, 0.5, (n_per_class, 2)),
                   rng.normal(separation / 2, 0.5, (n_per_class, 2))])
    y = np.r_[np.zeros(n_per_class, int), np.ones(n_per_class, int)]
    for i in flip:
        y[i] = 1 - y[i]
    return from_arrays(X, np.array(["a", "b"])[y], name="blobs", classes=["a", "b"])


@pytest.fixture
def blob_ds():
    return blobs()


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.summary_lines():
            terminalreporter.write_line(line)
