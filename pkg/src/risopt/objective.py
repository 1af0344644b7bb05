"""Achievable rate, the minimization objective and its closed-form gradients.

Gradient conventions
--------------------
``grad_F`` returns the conjugate cogradient ``df/dF*``; the first-order change
of ``f`` along a complex direction ``D`` is ``2 Re<grad_F, D>``.

``grad_t`` returns the ordinary gradient over the real simplex weights, laid
out row-major (block ``i`` is RIS element ``i``). The factor ``c = rho / P_n``
multiplies the diagonal term; the finite-difference tests in
``tests/test_objective.py`` pin this down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from .channel import ChannelSet, effective_channel
from .numerics import DimensionMismatch, logdet_eye_plus

__all__ = [
    "LinkBudget",
    "RateModel",
    "check_precoder",
    "achievable_rate",
    "objective_f",
    "grad_F",
    "grad_t",
    "fd_gradient_oracle",
]


@dataclass(frozen=True)
class LinkBudget:
    rho: float  # W per stream
    noise_power: float  # W

    def __post_init__(self):
        if not (self.rho > 0 and self.noise_power > 0):
            raise ValueError("rho and noise_power must be positive")

    @property
    def snr(self) -> float:
        return self.rho / self.noise_power


def check_precoder(F, n_s: int, atol: float = 1e-9) -> np.ndarray:
    F = np.asarray(F, dtype=np.complex128)
    if F.ndim != 2 or F.shape[1] != n_s:
        raise DimensionMismatch(f"precoder must have {n_s} columns, got shape {F.shape}")
    if np.linalg.norm(F) ** 2 > n_s + atol:
        raise ValueError("precoder violates the power constraint ||F||_F^2 <= N_s")
    return F


def achievable_rate(F, H, lb: LinkBudget) -> float:
    """``log2 det(I + (rho/P_n) F^H H^H H F)`` in bits/s/Hz."""
    F = np.asarray(F, dtype=np.complex128)
    H = np.asarray(H, dtype=np.complex128)
    if H.shape[1] != F.shape[0]:
        raise DimensionMismatch(f"H is {H.shape}, F is {F.shape}")
    HF = H @ F
    return max(logdet_eye_plus(lb.snr * (HF.conj().T @ HF)) / math.log(2.0), 0.0)


def objective_f(F, phi, ch: ChannelSet, lb: LinkBudget) -> float:
    """``-ln det(I + (rho/P_n) F^H H^H H F)`` at ``H = effective_channel(ch, phi)``."""
    F = np.asarray(F, dtype=np.complex128)
    HF = effective_channel(ch, phi) @ F
    return -logdet_eye_plus(lb.snr * (HF.conj().T @ HF))


class RateModel:
    """Fused evaluator of ``f`` and its gradients for one channel realization.

    ``H`` is never formed; everything goes through ``H_sd F``, ``H_sr F`` and
    the RIS diagonal, so cost is linear in each array size.
    """

    def __init__(self, ch: ChannelSet, lb: LinkBudget):
        self.ch = ch
        self.c = float(lb.snr)
        self.H_sd = np.ascontiguousarray(ch.H_sd)
        self.H_sr = np.ascontiguousarray(ch.H_sr)
        self.H_rd = np.ascontiguousarray(ch.H_rd)
        self.n_ris = ch.n_ris
        self.n_evals = 0

    def hf(self, F, phi) -> np.ndarray:
        A0 = self.H_sd @ F
        if self.n_ris == 0:
            return A0
        return K.cascade(A0, self.H_rd, np.ascontiguousarray(phi, dtype=np.complex128), self.H_sr @ F)

    def adjoint(self, X, phi) -> np.ndarray:
        """``H^H X`` for the effective channel at `phi`."""
        out = self.H_sd.conj().T @ X
        if self.n_ris:
            out += self.H_sr.conj().T @ (np.conj(phi)[:, None] * (self.H_rd.conj().T @ X))
        return out

    def value_from_hf(self, hf) -> float:
        self.n_evals += 1
        return K.neg_logdet_gram(np.ascontiguousarray(hf), self.c)[0]

    def value(self, F, phi) -> float:
        return self.value_from_hf(self.hf(F, phi))

    def value_grad_F(self, F, phi):
        hf = self.hf(F, phi)
        self.n_evals += 1
        f, L = K.neg_logdet_gram(hf, self.c)
        X = K.chol_solve(L, np.ascontiguousarray(hf.conj().T)).conj().T  # hf K^-1
        return f, -self.c * self.adjoint(X, phi)

    def ris_block(self, F) -> "RisBlock":
        return RisBlock(self, F)


class RisBlock:
    """``f`` as a function of the RIS phases with the precoder held fixed."""

    def __init__(self, model: RateModel, F):
        self.model = model
        self.A0 = model.H_sd @ F
        self.B = np.ascontiguousarray(model.H_sr @ F)

    def hf(self, phi) -> np.ndarray:
        return K.cascade(self.A0, self.model.H_rd, np.ascontiguousarray(phi, dtype=np.complex128), self.B)

    def value(self, phi) -> float:
        return self.model.value_from_hf(self.hf(phi))

    def value_zdiag(self, phi):
        """Objective and ``c * diag(H_sr F K^-1 F^H H^H H_rd)``."""
        m = self.model
        hf = self.hf(phi)
        m.n_evals += 1
        f, L = K.neg_logdet_gram(hf, m.c)
        BK = K.chol_solve(L, np.ascontiguousarray(self.B.conj().T)).conj().T
        C = np.ascontiguousarray(hf.conj().T @ m.H_rd)
        return f, m.c * K.diag_product(np.ascontiguousarray(BK), C)


def grad_F(F, phi, ch: ChannelSet, lb: LinkBudget) -> np.ndarray:
    """Conjugate cogradient ``-(rho/P_n) H^H H F (I + (rho/P_n) F^H H^H H F)^-1``."""
    F = np.asarray(F, dtype=np.complex128)
    phi = np.asarray(phi, dtype=np.complex128).reshape(-1)
    if phi.shape[0] != ch.n_ris:
        raise DimensionMismatch(f"phi has {phi.shape[0]} entries, RIS has {ch.n_ris}")
    return RateModel(ch, lb).value_grad_F(F, phi)[1]


def grad_t(F, t, codebook, ch: ChannelSet, lb: LinkBudget) -> np.ndarray:
    """Gradient over the flattened simplex weights ``t`` (length ``M * N_ris``).

    Entry ``i * M + k`` is ``-2 Re(theta_k * Zc_ii)`` with
    ``Zc = (rho/P_n) H_sr F (I + (rho/P_n) F^H H^H H F)^-1 F^H H^H H_rd``.
    """
    theta = codebook.theta
    T = np.asarray(t, dtype=float).reshape(-1, theta.shape[0])
    if T.shape[0] != ch.n_ris:
        raise DimensionMismatch(f"t has {T.shape[0]} blocks, RIS has {ch.n_ris}")
    F = np.asarray(F, dtype=np.complex128)
    if ch.n_ris == 0:
        return np.zeros(0)
    phi = T @ theta
    _, zd = RateModel(ch, lb).ris_block(F).value_zdiag(phi)
    return (-2.0 * np.real(np.outer(zd, theta))).reshape(-1)


def fd_gradient_oracle(fun: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a real function.

    For complex `x` the estimate is the conjugate cogradient
    ``(df/dRe + 1j df/dIm) / 2`` so it can be compared with ``grad_F`` directly.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x)
    is_complex = np.iscomplexobj(x)
    base = x.astype(np.complex128 if is_complex else float).copy()
    flat = base.reshape(-1)
    out = np.zeros(flat.shape, dtype=np.complex128 if is_complex else float)
    steps = (1.0, 1j) if is_complex else (1.0,)
    for i in range(flat.size):
        orig = flat[i]
        for s in steps:
            flat[i] = orig + h * s
            fp = fun(base)
            flat[i] = orig - h * s
            fm = fun(base)
            flat[i] = orig
            d = (fp - fm) / (2.0 * h)
            out[i] += s * d / 2.0 if is_complex else d
    return out.reshape(x.shape)
