"""Slow, independent reference computations used by tests and ``risopt validate``."""

from __future__ import annotations

import itertools

import numpy as np

__all__ = ["simplex_projection_enum", "logdet_eig", "rate_eig"]


def simplex_projection_enum(x) -> np.ndarray:
    """Simplex projection by enumerating every support set (KKT conditions).

    For support ``S`` the minimizer is ``y_S = x_S - (sum(x_S) - 1)/|S|``; the
    answer is the closest feasible candidate. Exponential in ``len(x)``.
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    best, best_d = None, np.inf
    for r in range(1, m + 1):
        for S in itertools.combinations(range(m), r):
            S = list(S)
            y = np.zeros(m)
            y[S] = x[S] - (x[S].sum() - 1.0) / r
            if np.all(y >= -1e-15):
                d = float(np.sum((y - x) ** 2))
                if d < best_d:
                    best, best_d = np.maximum(y, 0.0), d
    return best


def logdet_eig(A) -> float:
    """``ln det`` of a Hermitian PD matrix from its eigenvalues."""
    return float(np.sum(np.log(np.linalg.eigvalsh(np.asarray(A)))))


def rate_eig(F, H, snr: float) -> float:
    """``sum log2(1 + lambda_k)`` over eigenvalues of ``snr F^H H^H H F``."""
    HF = np.asarray(H) @ np.asarray(F)
    lam = np.linalg.eigvalsh(snr * HF.conj().T @ HF)
    return float(np.sum(np.log2(1.0 + np.clip(lam, 0.0, None))))
