"""Hot inner kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import time. Set ``RISOPT_NUMBA=0`` to force the
numpy path (useful for debugging and for the benchmark in ``benchmarks/``).
Both implementations are always importable as ``numpy_impl`` and, when numba is
installed, ``numba_impl`` so they can be compared side by side.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np
from scipy.linalg import cho_solve

from .numerics import NotPositiveDefinite

__all__ = [
    "BACKEND",
    "neg_logdet_gram",
    "chol_solve",
    "simplex_rows",
    "diag_product",
    "cascade",
    "numpy_impl",
    "numba_impl",
]


# ----------------------------------------------------------------------------
# numpy reference path
# ----------------------------------------------------------------------------

def _np_neg_logdet_gram(hf, c):
    n = hf.shape[1]
    G = c * (hf.conj().T @ hf)
    K = G.copy()
    K[np.diag_indices(n)] += 1.0
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    # log1p of the eigenvalues keeps f accurate when G is tiny; L is only used for solves
    return -float(np.sum(np.log1p(np.linalg.eigvalsh(G)))), L


def _np_chol_solve(L, B):
    return cho_solve((L, True), B, check_finite=False)


def _np_simplex_rows(X):
    n, m = X.shape
    U = -np.sort(-X, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    active = U - css / np.arange(1, m + 1) > 0
    rho = m - 1 - np.argmax(active[:, ::-1], axis=1)
    tau = css[np.arange(n), rho] / (rho + 1)
    return np.maximum(X - tau[:, None], 0.0)


def _np_diag_product(A, B):
    return np.einsum("ij,ji->i", A, B)


def _np_cascade(A0, Hrd, phi, B):
    return A0 + Hrd @ (phi[:, None] * B)


numpy_impl = SimpleNamespace(
    neg_logdet_gram=_np_neg_logdet_gram,
    chol_solve=_np_chol_solve,
    simplex_rows=_np_simplex_rows,
    diag_product=_np_diag_product,
    cascade=_np_cascade,
)


# ----------------------------------------------------------------------------
# numba path
# ----------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def neg_logdet_gram(hf, c):
        m, n = hf.shape
        K = np.zeros((n, n), dtype=np.complex128)
        for i in range(n):
            for j in range(i + 1):
                acc = 0.0j
                for r in range(m):
                    acc += np.conj(hf[r, i]) * hf[r, j]
                K[i, j] = c * acc
        # Cholesky of I + K with pivots tracked as d^2 - 1 so log1p stays accurate
        L = np.zeros((n, n), dtype=np.complex128)
        logdet = 0.0
        for j in range(n):
            s = K[j, j].real
            for k in range(j):
                s -= L[j, k].real ** 2 + L[j, k].imag ** 2
            if not s > -1.0:
                raise NotPositiveDefinite("non-positive pivot in Cholesky factorization")
            d = np.sqrt(1.0 + s)
            L[j, j] = d
            logdet += np.log1p(s)
            for i in range(j + 1, n):
                v = K[i, j]
                for k in range(j):
                    v -= L[i, k] * np.conj(L[j, k])
                L[i, j] = v / d
        return -logdet, L

    @njit(cache=True)
    def chol_solve(L, B):
        n, k = B.shape
        Y = np.empty((n, k), dtype=np.complex128)
        for col in range(k):
            for i in range(n):
                v = B[i, col]
                for j in range(i):
                    v -= L[i, j] * Y[j, col]
                Y[i, col] = v / L[i, i].real
            for i in range(n - 1, -1, -1):
                v = Y[i, col]
                for j in range(i + 1, n):
                    v -= np.conj(L[j, i]) * Y[j, col]
                Y[i, col] = v / L[i, i].real
        return Y

    @njit(cache=True)
    def simplex_rows(X):
        n, m = X.shape
        out = np.empty_like(X)
        u = np.empty(m)
        for r in range(n):
            # insertion sort, descending; rows are short (M = 2^bits)
            for j in range(m):
                v = X[r, j]
                i = j
                while i > 0 and u[i - 1] < v:
                    u[i] = u[i - 1]
                    i -= 1
                u[i] = v
            css = 0.0
            tau = 0.0
            for j in range(m):
                css += u[j]
                cand = (css - 1.0) / (j + 1)
                if u[j] - cand > 0.0:
                    tau = cand
            for j in range(m):
                v = X[r, j] - tau
                out[r, j] = v if v > 0.0 else 0.0
        return out

    @njit(cache=True)
    def diag_product(A, B):
        n, k = A.shape
        out = np.zeros(n, dtype=np.complex128)
        for i in range(n):
            acc = 0.0j
            for j in range(k):
                acc += A[i, j] * B[j, i]
            out[i] = acc
        return out

    @njit(cache=True)
    def cascade(A0, Hrd, phi, B):
        nrx, nris = Hrd.shape
        ns = B.shape[1]
        out = A0.copy()
        for r in range(nris):
            p = phi[r]
            for s in range(ns):
                w = p * B[r, s]
                for i in range(nrx):
                    out[i, s] += Hrd[i, r] * w
        return out

    return SimpleNamespace(
        neg_logdet_gram=neg_logdet_gram,
        chol_solve=chol_solve,
        simplex_rows=simplex_rows,
        diag_product=diag_product,
        cascade=cascade,
    )


try:
    numba_impl = _build_numba()
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None


def _wants_numba() -> bool:
    flag = os.environ.get("RISOPT_NUMBA", "1").strip().lower()
    return flag not in {"0", "false", "no", "off"}


_active = numba_impl if (numba_impl is not None and _wants_numba()) else numpy_impl
BACKEND = "numba" if _active is numba_impl else "numpy"

neg_logdet_gram = _active.neg_logdet_gram
chol_solve = _active.chol_solve
simplex_rows = _active.simplex_rows
diag_product = _active.diag_product
cascade = _active.cascade
