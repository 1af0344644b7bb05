"""Discrete RIS phase codebook and its convex-hull (simplex weight) relaxation.

Simplex weights are stored as an ``N_ris x M`` real array ``T``; the flat
vector ``t`` used by the gradient is ``T.ravel()`` (row-major, block ``i`` is
row ``i``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .numerics import DimensionMismatch

__all__ = [
    "PhaseCodebook",
    "uniform_weights",
    "check_weights",
    "phases_from_weights",
    "discretize_solution",
    "quantize_phases",
]


@dataclass(frozen=True)
class PhaseCodebook:
    amplitude: float = 1.0
    bits: int = 1

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.bits < 1:
            raise ValueError("bits must be >= 1")

    @property
    def size(self) -> int:
        return 2**self.bits

    @cached_property
    def theta(self) -> np.ndarray:
        k = np.arange(self.size)
        th = self.amplitude * np.exp(2j * np.pi * k / self.size)
        th.setflags(write=False)
        return th


def uniform_weights(n_ris: int, m: int) -> np.ndarray:
    return np.full((n_ris, m), 1.0 / m)


def check_weights(T, m: int, atol: float = 1e-9) -> np.ndarray:
    T = np.asarray(T, dtype=float).reshape(-1, m)
    if np.any(T < -atol) or np.any(np.abs(T.sum(axis=1) - 1.0) > atol):
        raise ValueError("weights are not on the probability simplex")
    return T


def phases_from_weights(T, cb: PhaseCodebook) -> np.ndarray:
    """``phi_i = sum_k T[i, k] theta_k``."""
    T = np.asarray(T, dtype=float)
    if T.ndim == 1:
        T = T.reshape(-1, cb.size)
    if T.shape[1] != cb.size:
        raise DimensionMismatch(f"weights have {T.shape[1]} columns, codebook has {cb.size}")
    return T @ cb.theta


def discretize_solution(T, cb: PhaseCodebook) -> np.ndarray:
    """Per element pick the codeword with the largest weight (lowest index on ties)."""
    T = np.asarray(T, dtype=float).reshape(-1, cb.size)
    return cb.theta[np.argmax(T, axis=1)]


def quantize_phases(phi, cb: PhaseCodebook) -> np.ndarray:
    """Map each entry to the nearest codeword by angle."""
    ang = np.angle(np.asarray(phi, dtype=np.complex128))
    k = np.mod(np.rint(ang * cb.size / (2.0 * np.pi)), cb.size).astype(int)
    return cb.theta[k]
