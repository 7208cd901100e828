"""Backend selection for the hot numerical kernels.

Two interchangeable backends exist for the inner loops (SMO solver,
pairwise kernel matrices):

* ``numba``: scalar loops compiled with ``@njit`` (default when numba
  imports cleanly),
* ``numpy``: vectorized pure-numpy fallback.

Set the environment variable ``TYPWEIGHT_BACKEND`` to ``numpy`` or
``numba`` before import to force a backend. The two backends implement
the same algorithms and agree to floating-point roundoff; results are
bit-reproducible within a backend. ``bench/benchmark_backends.py``
compares their speed.
"""

import os

_ENV_VAR = "TYPWEIGHT_BACKEND"


def _select_backend() -> str:
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(f"{_ENV_VAR} must be 'numba' or 'numpy', got {requested!r}")
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _select_backend()
NUMBA_ENABLED = BACKEND == "numba"

if NUMBA_ENABLED:
    from numba import njit
else:
    def njit(*args, **kwargs):
        """No-op stand-in so ``@njit`` decorations stay importable."""
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap
