"""Path-stepping kernels for the mode-coefficient OU recursion.

One sample path is the exact-in-distribution recursion
x_{i+1} = decay * x_i + n_i, with decay the per-mode step multipliers
and n_i the correlated Gaussian innovations (standard normals already
multiplied by the innovation Cholesky factor — that product happens
once, outside the kernel, so both backends consume identical numbers
and produce bit-identical paths).  A numba version of the recursion is
used when available (it releases the GIL, so thread pools scale); the
numpy fallback implements the identical contract.

Backend choice: environment variable QGRAPH_NUMBA — "0" forces the
numpy fallback, "1" requires numba (import error if missing), unset
picks numba when importable.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = ["HAVE_NUMBA", "active_backend", "ou_paths", "warmup"]

_FLAG = os.environ.get("QGRAPH_NUMBA", "").strip()

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

if _FLAG == "1" and not HAVE_NUMBA:  # pragma: no cover
    raise ImportError("QGRAPH_NUMBA=1 but numba is not importable")

_DEFAULT_BACKEND = "numba" if (HAVE_NUMBA and _FLAG != "0") else "numpy"


def active_backend() -> str:
    return _DEFAULT_BACKEND


def _ou_paths_numpy(out: np.ndarray, decay: np.ndarray, noise: np.ndarray,
                    x0: np.ndarray) -> None:
    out[0] = x0
    x = np.array(x0, dtype=np.float64)
    for i in range(noise.shape[0]):
        x = decay * x + noise[i]
        out[i + 1] = x


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _ou_paths_numba(out, decay, noise, x0):  # pragma: no cover - jitted
        n_steps, n_modes = noise.shape
        for k in range(n_modes):
            out[0, k] = x0[k]
        for i in range(n_steps):
            for k in range(n_modes):
                out[i + 1, k] = decay[k] * out[i, k] + noise[i, k]


def ou_paths(out: np.ndarray, decay: np.ndarray, noise: np.ndarray,
             x0: np.ndarray, backend: str | None = None) -> None:
    """Fill out (n_steps + 1, n_modes) with one sample path in place."""
    which = _DEFAULT_BACKEND if backend is None else backend
    if which == "numba":
        if not HAVE_NUMBA:
            raise ValueError("numba backend requested but numba is not importable")
        _ou_paths_numba(out, decay, noise, x0)
    elif which == "numpy":
        _ou_paths_numpy(out, decay, noise, x0)
    else:
        raise ValueError(f"unknown backend {which!r}")


def warmup(backend: str | None = None) -> None:
    """Trigger jit compilation outside any timed or threaded region."""
    which = _DEFAULT_BACKEND if backend is None else backend
    if which != "numba" or not HAVE_NUMBA:
        return
    out = np.zeros((2, 1))
    ou_paths(out, np.ones(1), np.zeros((1, 1)), np.zeros(1), backend="numba")
