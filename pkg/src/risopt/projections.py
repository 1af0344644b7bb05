"""Euclidean projections used as proximal maps."""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .numerics import DimensionMismatch

__all__ = [
    "project_frobenius_ball",
    "project_simplex",
    "project_block_simplex",
    "project_simplex_rows",
    "project_circle",
]


def project_frobenius_ball(X, n_s: float) -> np.ndarray:
    """Project onto ``{X : ||X||_F^2 <= n_s}`` by radial scaling."""
    X = np.asarray(X)
    nrm = np.linalg.norm(X)
    if nrm * nrm <= n_s:
        return X
    Y = X * (np.sqrt(n_s) / nrm)
    # round-off can leave ||Y||^2 a few ulps above n_s; shrink so a second call is a no-op
    while np.linalg.norm(Y) ** 2 > n_s:
        Y = Y * (1.0 - 2.0**-52)
    return Y


def project_simplex_rows(X) -> np.ndarray:
    """Project every row of a 2-D array onto the probability simplex."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("expected a 2-D array")
    if X.size == 0:
        return X.copy()
    return K.simplex_rows(X)


def project_simplex(x) -> np.ndarray:
    """Euclidean projection onto ``{y >= 0, sum(y) = 1}``.

    Sort-and-threshold method of Wang & Carreira-Perpinan (2013): with ``u``
    sorted descending, ``tau = (sum(u[:r]) - 1) / r`` for the largest ``r``
    such that ``u[r-1] > tau``; then ``y = max(x - tau, 0)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DimensionMismatch("expected a non-empty 1-D vector")
    return project_simplex_rows(x[None, :])[0]


def project_block_simplex(t, m: int) -> np.ndarray:
    """Apply `project_simplex` to each consecutive length-`m` block of `t`."""
    t = np.asarray(t, dtype=float).reshape(-1)
    if m < 1 or t.size % m:
        raise DimensionMismatch(f"length {t.size} is not a multiple of block size {m}")
    return project_simplex_rows(t.reshape(-1, m)).reshape(-1)


def project_circle(phi, amplitude: float = 1.0) -> np.ndarray:
    """Nearest point with ``|phi_i| = amplitude``; zeros map to ``amplitude``."""
    phi = np.asarray(phi, dtype=np.complex128)
    mag = np.abs(phi)
    out = np.full(phi.shape, amplitude, dtype=np.complex128)
    nz = mag > 0
    out[nz] = amplitude * phi[nz] / mag[nz]
    return out
