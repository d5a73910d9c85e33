"""Backend selection for the all-pairs adjacency kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``JANE_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy fallback is used. ``BACKEND`` names the active choice.
"""

import os

import numpy as np

from . import _kernels_py

_force_pure = os.environ.get("JANE_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure Python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def backends():
    """Available backend modules keyed by name."""
    found = {"python": _kernels_py}
    if _compiled is not None:
        found["compiled"] = _compiled
    return found


def _csr(g):
    return (np.ascontiguousarray(g.indptr, dtype=np.intp),
            np.ascontiguousarray(g.indices, dtype=np.intp))


def adjacency_grad(g, U, scale_sq, backend=None):
    impl = _impl if backend is None else backends()[backend]
    indptr, indices = _csr(g)
    return impl.adjacency_grad(indptr, indices, np.ascontiguousarray(U, dtype=np.float64), float(scale_sq))


def adjacency_sums(g, U, scale_sq, backend=None):
    impl = _impl if backend is None else backends()[backend]
    indptr, indices = _csr(g)
    return impl.adjacency_sums(indptr, indices, np.ascontiguousarray(U, dtype=np.float64), float(scale_sq))
