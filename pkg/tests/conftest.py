import numpy as np
import pytest

from typweight.kernels import KernelSpec
from typweight.ocsvm import fit_ocsvm


@pytest.fixture(scope="session", autouse=True)
def _warm_hot_kernels():
    """Trigger JIT compilation of the numba kernels once, before any
    timed test; with cache=True later sessions load from disk."""
    rng = np.random.default_rng(0)
    fit_ocsvm(rng.standard_normal((8, 3)), nu=0.5, kernel=KernelSpec("rbf", 1.0))
