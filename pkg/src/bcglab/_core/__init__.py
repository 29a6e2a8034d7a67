"""Backend selection for the hot kernels.

The batched tuple-determinant kernel dominates the runtime of every Monte
Carlo functional, so it exists twice: a compiled Cython extension and a pure
numpy fallback.  The compiled version is preferred when importable; set
``BCGLAB_BACKEND=numpy`` or ``BCGLAB_BACKEND=cython`` to force a choice.
"""

import os

import numpy as np

from . import _kernels_py

_requested = os.environ.get("BCGLAB_BACKEND", "auto").lower()

if _requested in ("auto", "cython"):
    try:
        from . import _kernels as _impl

        backend_name = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _kernels_py
        backend_name = "numpy"
elif _requested == "numpy":
    _impl = _kernels_py
    backend_name = "numpy"
else:
    raise ValueError(
        f"BCGLAB_BACKEND={_requested!r} not understood (use auto, cython, or numpy)"
    )


def tuple_det_abs(vectors: np.ndarray) -> np.ndarray:
    """Dieudonne determinant magnitudes for a batch of vector tuples.

    ``vectors`` has shape (N, n, m, 4): N tuples of m column vectors in F^n,
    entries as four real components.  Returns the (N,) array of |det|, the
    product of Gram-Schmidt diagonal norms (0 for dependent tuples).
    """
    v = np.ascontiguousarray(vectors, dtype=np.float64)
    if v.ndim != 4 or v.shape[3] != 4:
        raise ValueError(f"expected shape (N, n, m, 4), got {v.shape}")
    return _impl.tuple_det_abs_batch(v)


def available_backends():
    names = ["numpy"]
    try:
        from . import _kernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_impl(name: str):
    """Fetch a specific backend module (used by tests and benchmarks)."""
    if name == "numpy":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(name)
