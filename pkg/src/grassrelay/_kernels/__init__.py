"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import from ``GRASSRELAY_BACKEND`` (``numba`` or
``numpy``); ``numba`` is the default when the package imports cleanly. Both
implementations stay importable for benchmarking and cross-checks.
"""

import os

import numpy as np

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # numba missing or broken
    numba_impl = None

_requested = os.environ.get("GRASSRELAY_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"GRASSRELAY_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = "numba" if (_requested == "numba" and numba_impl is not None) else "numpy"
_impl = numba_impl if BACKEND == "numba" else numpy_impl


def sphere_ascent(A, B, lam, mu, starts, tol=1e-10, max_iter=500, armijo=1e-4, shrink=0.5):
    """Armijo gradient ascent of ``a/(a+lam) + mu*b`` over unit vectors.

    ``a = s^H A s`` and ``b = s^H B s`` for Hermitian ``A``, ``B``. Each row of
    ``starts`` is run independently; returns (final vectors, objective values,
    iteration counts), one entry per start.
    """
    A = np.ascontiguousarray(A, dtype=np.complex128)
    B = np.ascontiguousarray(B, dtype=np.complex128)
    starts = np.ascontiguousarray(starts, dtype=np.complex128)
    return _impl.sphere_ascent(A, B, float(lam), float(mu), starts, float(tol),
                               int(max_iter), float(armijo), float(shrink))


def packing_refine(W0, temperatures, steps, step_size):
    """Annealed log-sum-exp descent on pairwise |w_i^H w_j|^2, rows kept unit-norm."""
    W0 = np.ascontiguousarray(W0, dtype=np.complex128)
    temperatures = np.ascontiguousarray(temperatures, dtype=np.float64)
    return _impl.packing_refine(W0, temperatures, int(steps), float(step_size))
