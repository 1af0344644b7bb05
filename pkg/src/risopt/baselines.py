"""Reference solutions and benchmark schemes.

* waterfilling: optimal precoder for a fixed effective channel;
* exhaustive search over every codebook assignment (tiny RIS only);
* the baseline suite used by the sweep: no RIS, static RIS, continuous
  phases with and without quantization.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional

import numpy as np

from .channel import ChannelSet, effective_channel
from .codebook import PhaseCodebook, quantize_phases
from .numerics import RngStream
from .objective import LinkBudget, achievable_rate
from .optimizer import OptimizerConfig, SolverFailure, continuous_phase_solve, refit_precoder

log = logging.getLogger(__name__)

__all__ = [
    "Waterfilling",
    "TooLarge",
    "waterfilling_oracle",
    "exhaustive_discrete_oracle",
    "BaselineOutcome",
    "BASELINE_LABELS",
    "baseline_suite",
]

ENUMERATION_LIMIT = 10**6


class Waterfilling(NamedTuple):
    F: np.ndarray
    rate: float
    rank_deficient: bool


class TooLarge(ValueError):
    pass


def _water_levels(gains: np.ndarray, total: float) -> np.ndarray:
    """Powers ``(mu - 1/g)_+`` summing to `total`, water level found by bisection."""
    inv = 1.0 / gains
    lo, hi = 0.0, total + inv.max()
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        if np.maximum(mu - inv, 0.0).sum() > total:
            hi = mu
        else:
            lo = mu
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    p = np.maximum(0.5 * (lo + hi) - inv, 0.0)
    return p * (total / p.sum())


def waterfilling_oracle(H, lb: LinkBudget, n_s: int) -> Waterfilling:
    """Rate-optimal precoder for fixed ``H`` under ``||F||_F^2 <= n_s``.

    Uses the top `n_s` right singular vectors of ``H``. If ``H`` has fewer
    than `n_s` non-zero singular values, power goes to the available modes
    only and ``rank_deficient`` is set.
    """
    H = np.asarray(H, dtype=np.complex128)
    _, s, Vh = np.linalg.svd(H, full_matrices=False)
    n_tx = H.shape[1]
    tol = (s[0] if s.size else 0.0) * max(H.shape) * np.finfo(float).eps
    usable = int(np.sum(s[:n_s] > tol)) if s.size and s[0] > 0 else 0
    F = np.zeros((n_tx, n_s), dtype=np.complex128)
    if usable == 0:
        F[: min(n_s, n_tx), : min(n_s, n_tx)] = np.eye(min(n_s, n_tx))
        return Waterfilling(F, 0.0, True)
    gains = lb.snr * s[:usable] ** 2
    p = _water_levels(gains, float(n_s))
    F[:, :usable] = Vh[:usable].conj().T * np.sqrt(p)
    rate = float(np.sum(np.log2(1.0 + gains * p)))
    return Waterfilling(F, rate, usable < n_s)


def exhaustive_discrete_oracle(ch: ChannelSet, lb: LinkBudget, cb: PhaseCodebook, n_s: int):
    """Best codebook assignment by full enumeration; returns ``(phi, rate)``."""
    m, n = cb.size, ch.n_ris
    if m**n > ENUMERATION_LIMIT:
        raise TooLarge(f"{m}^{n} assignments exceed the limit of {ENUMERATION_LIMIT}")
    best_rate, best_phi = -np.inf, None
    for idx in itertools.product(range(m), repeat=n):
        phi = cb.theta[list(idx)] if n else np.zeros(0, np.complex128)
        rate = waterfilling_oracle(effective_channel(ch, phi), lb, n_s).rate
        if rate > best_rate:
            best_rate, best_phi = rate, phi
    return best_phi, best_rate


@dataclass(frozen=True)
class BaselineOutcome:
    rate: float
    iterations: int = 0
    bt_evals: int = 0
    wall_time: float = 0.0


BASELINE_LABELS = ("no-ris", "static-ris", "cont-quantized", "cont-unquantized")


def baseline_suite(
    ch: ChannelSet,
    lb: LinkBudget,
    cb: PhaseCodebook,
    cfg: Optional[OptimizerConfig] = None,
    *,
    n_s: int = 2,
    rng: Optional[RngStream] = None,
) -> Dict[str, BaselineOutcome]:
    """Rates of the four reference schemes on one channel realization.

    ``static-ris`` draws every phase uniformly from the codebook using `rng`.
    ``cont-unquantized`` optimizes unit-modulus phases jointly with the
    precoder; ``cont-quantized`` rounds those phases to the nearest codeword
    and refits the precoder. If the continuous solve fails, both continuous
    entries get a NaN rate and the closed-form entries are still reported.
    """
    cfg = cfg or OptimizerConfig()
    rng = rng or RngStream(0, 0)
    out: Dict[str, BaselineOutcome] = {}

    t0 = time.perf_counter()
    out["no-ris"] = BaselineOutcome(waterfilling_oracle(ch.H_sd, lb, n_s).rate,
                                    wall_time=time.perf_counter() - t0)

    t0 = time.perf_counter()
    k = rng.generator().integers(0, cb.size, ch.n_ris)
    phi_static = cb.theta[k]
    wf = waterfilling_oracle(effective_channel(ch, phi_static), lb, n_s)
    out["static-ris"] = BaselineOutcome(wf.rate, wall_time=time.perf_counter() - t0)

    t0 = time.perf_counter()
    try:
        cont = continuous_phase_solve(ch, lb, cb.amplitude, cfg, n_s=n_s)
    except SolverFailure as exc:
        log.warning("continuous-phase baseline failed: %s", exc)
        wall = time.perf_counter() - t0
        out["cont-unquantized"] = out["cont-quantized"] = BaselineOutcome(np.nan, wall_time=wall)
        return {label: out[label] for label in BASELINE_LABELS}
    t_cont = time.perf_counter() - t0
    out["cont-unquantized"] = BaselineOutcome(cont.rate, cont.iterations, cont.bt_evals, t_cont)

    t0 = time.perf_counter()
    phi_q = quantize_phases(cont.phi, cb)
    F_q = refit_precoder(ch, lb, phi_q, cfg, cont.F)
    rate_q = achievable_rate(F_q, effective_channel(ch, phi_q), lb)
    out["cont-quantized"] = BaselineOutcome(rate_q, cont.iterations, cont.bt_evals,
                                            t_cont + time.perf_counter() - t0)
    return {label: out[label] for label in BASELINE_LABELS}
