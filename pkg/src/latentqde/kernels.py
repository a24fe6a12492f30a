"""Kernel backend selection.

The compiled extension is used when it was built; otherwise (or when
``LATENTQDE_PURE_PYTHON=1``) the numpy implementation is used.  ``BACKEND``
names the active one.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("LATENTQDE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def ansatz_states(thetas, n: int, layers: int) -> np.ndarray:
    """(B, 2^n) real ansatz states for a (B, layers * n) parameter batch."""
    return _impl.ansatz_states(np.ascontiguousarray(thetas, dtype=np.float64), int(n), int(layers))


def chebyshev_product(g, h) -> np.ndarray:
    """Batched latent Chebyshev product, (B, d) x (B, d) -> (B, 2d)."""
    return _impl.chebyshev_product(np.ascontiguousarray(g, dtype=np.complex128),
                                   np.ascontiguousarray(h, dtype=np.complex128))


def fourier_product(g, h) -> np.ndarray:
    """Batched latent Fourier product, (B, d) x (B, d) -> (B, 2d)."""
    return _impl.fourier_product(np.ascontiguousarray(g, dtype=np.complex128),
                                 np.ascontiguousarray(h, dtype=np.complex128))


__all__ = ["BACKEND", "ansatz_states", "chebyshev_product", "fourier_product"]
