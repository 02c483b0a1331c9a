"""Pure-numpy element kernels (fallback path)."""

import numpy as np


def element_matrices(moments, metrics):
    """Contract reference moment tensors with per-element metrics.

    moments : (ni, nj, 3, 3) quadrature moments of reference basis pairs
    metrics : (nt, 3, 3) per-element geometry/coefficient metric
    returns : (nt, ni, nj) element matrices
    """
    return np.einsum("ijde,tde->tij", moments, metrics, optimize=True)
