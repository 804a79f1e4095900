"""Numba/numpy backend selection for the hot simplex kernels.

The environment variable ``DOMSIMPLEX_BACKEND`` picks the implementation:

* ``numba`` (default when numba imports) - JIT-compiled pivot loops.
* ``numpy`` - pure-numpy fallback, identical arithmetic, no compilation.

The flag is read at every solve so tests and benchmarks can flip it at
runtime without reloading the package.
"""

import os

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    HAS_NUMBA = False

_ENV_VAR = "DOMSIMPLEX_BACKEND"
_VALID = ("numba", "numpy")


def backend_name() -> str:
    """Resolve the active backend from the environment."""
    raw = os.environ.get(_ENV_VAR, "").strip().lower()
    if raw in _VALID:
        if raw == "numba" and not HAS_NUMBA:
            raise RuntimeError(
                f"{_ENV_VAR}=numba requested but numba is not importable"
            )
        return raw
    return "numba" if HAS_NUMBA else "numpy"


def use_numba() -> bool:
    return backend_name() == "numba"
