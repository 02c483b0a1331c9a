"""Element-kernel backend selection.

The per-element matrix contraction dominates assembly time.  Two
implementations are provided: a numba-JIT backend (default when numba
imports) and a pure-numpy einsum backend.  Select explicitly with the
environment variable ``CAVITYLAB_KERNELS={auto,numba,numpy}``; both
produce identical results to roundoff (see benchmarks/bench_assembly.py).
"""

import os

from . import numpy_backend

_choice = os.environ.get("CAVITYLAB_KERNELS", "auto").lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"CAVITYLAB_KERNELS={_choice!r} not recognized (auto, numba, numpy)")

if _choice in ("auto", "numba"):
    try:
        from . import numba_backend as _impl
        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        _impl = numpy_backend
        BACKEND = "numpy"
else:
    _impl = numpy_backend
    BACKEND = "numpy"

element_matrices = _impl.element_matrices
