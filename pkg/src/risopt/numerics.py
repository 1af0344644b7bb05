"""Complex linear-algebra helpers shared by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. ``as_cmatrix``
validates and returns a read-only copy, which is what "ComplexMatrix" means
throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "NotPositiveDefinite",
    "NotHermitian",
    "DimensionMismatch",
    "as_cmatrix",
    "hermitian_logdet",
    "logdet_eye_plus",
    "pd_solve",
    "RngStream",
    "sample_cgaussian",
]

HERMITIAN_RTOL = 1e-10


class NotPositiveDefinite(np.linalg.LinAlgError):
    pass


class NotHermitian(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


def as_cmatrix(a, *, allow_empty: bool = False) -> np.ndarray:
    """Return `a` as an immutable, finite, 2-D complex128 array."""
    m = np.array(a, dtype=np.complex128, copy=True)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not allow_empty and min(m.shape) < 1:
        raise DimensionMismatch(f"matrix must be at least 1x1, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    m.setflags(write=False)
    return m


def _symmetrized(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > HERMITIAN_RTOL * max(scale, 1.0):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    return 0.5 * (A + A.conj().T)


def _cholesky(A):
    try:
        return cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def hermitian_logdet(A) -> float:
    """Natural log-determinant of a Hermitian positive definite matrix.

    Computed from the Cholesky factor as ``2 * sum(log(diag(L)))``.
    """
    L, _ = _cholesky(_symmetrized(A))
    return 2.0 * float(np.sum(np.log(L.diagonal().real)))


def logdet_eye_plus(A) -> float:
    """``ln det(I + A)`` for Hermitian positive semidefinite `A`.

    Summing ``log1p`` over the eigenvalues of `A` keeps full relative accuracy
    when ``A`` is small, where forming ``I + A`` first would round it away.
    """
    lam = np.linalg.eigvalsh(_symmetrized(A))
    if lam.size and lam[0] <= -1.0:
        raise NotPositiveDefinite("I + A is not positive definite")
    return float(np.sum(np.log1p(lam)))


def pd_solve(A, B) -> np.ndarray:
    """Solve ``A X = B`` for Hermitian positive definite `A`."""
    B = np.asarray(B, dtype=np.complex128)
    As = _symmetrized(A)
    if As.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"A is {As.shape}, B has {B.shape[0]} rows")
    return cho_solve(_cholesky(As), B, check_finite=False)


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream id; equal pairs give equal sample sequences.

    Streams are derived with ``SeedSequence(seed, spawn_key=(stream,))`` so
    trial ``k`` gets the same numbers no matter which worker runs it.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_cgaussian(rng, rows: int, cols: int, variance: float = 1.0) -> np.ndarray:
    """i.i.d. CN(0, variance) entries; real and imaginary parts each get variance/2."""
    if not variance > 0:
        raise ValueError("variance must be positive")
    gen = _as_generator(rng)
    scale = np.sqrt(variance / 2.0)
    z = gen.standard_normal((rows, cols, 2))
    return scale * (z[..., 0] + 1j * z[..., 1])
