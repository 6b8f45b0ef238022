"""Hot-kernel dispatch: compiled extension if importable, numpy otherwise.

Set ``DYSONRG_PURE=1`` to force the numpy versions.  ``RG_THREADS`` caps the
thread count handed to the compiled butterfly.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("DYSONRG_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py


def threads() -> int:
    try:
        return max(1, int(os.environ.get("RG_THREADS", "1")))
    except ValueError:
        return 1


def wht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform of a copy of ``a``."""
    out = np.array(a, dtype=np.float64, copy=True, order="C")
    if BACKEND == "cython":
        _impl.wht_inplace(out, threads())
    else:
        _impl.wht_inplace(out)
    return out


def wht_interval(lo: np.ndarray, hi: np.ndarray):
    lo = np.array(lo, dtype=np.float64, copy=True, order="C")
    hi = np.array(hi, dtype=np.float64, copy=True, order="C")
    if BACKEND == "cython":
        _impl.wht_interval_inplace(lo, hi, threads())
    else:
        _impl.wht_interval_inplace(lo, hi)
    return lo, hi


def pair_energies(coupling: np.ndarray) -> np.ndarray:
    return _impl.pair_energies(np.ascontiguousarray(coupling, dtype=np.float64))
