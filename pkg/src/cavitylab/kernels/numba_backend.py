"""Numba-JIT element kernels (default hot path)."""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def element_matrices(moments, metrics):
    """Contract reference moment tensors with per-element metrics.

    Same contract as the numpy backend; elements are independent, so the
    parallel loop is bitwise deterministic for any thread count.
    """
    nt = metrics.shape[0]
    ni = moments.shape[0]
    nj = moments.shape[1]
    out = np.empty((nt, ni, nj))
    for t in prange(nt):
        for i in range(ni):
            for j in range(nj):
                acc = 0.0
                for d in range(3):
                    for e in range(3):
                        acc += moments[i, j, d, e] * metrics[t, d, e]
                out[t, i, j] = acc
    return out
