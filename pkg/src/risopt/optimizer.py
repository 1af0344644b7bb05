"""Accelerated cyclic block proximal gradient over (precoder, RIS phases).

One engine, three uses:

* ``da_cbpg_solve`` optimizes the precoder and the convex-hull weights ``T``
  and then rounds ``T`` to the codebook;
* ``continuous_phase_solve`` optimizes unit-modulus phases instead of ``T``
  (the continuous-phase baseline);
* ``refit_precoder`` runs the precoder block alone with the phases frozen.

Every block update is ``x+ = prox(xbar - alpha * g)`` at an extrapolated point
``xbar = x + q/(q+3) (x - x_prev)``. ``g`` is the gradient in the real inner
product, so for the complex precoder it is ``2 * df/dF*``. The step is accepted
once ``f(x+) <= f(xbar) + Re<g, x+ - xbar> + ||x+ - xbar||^2 / (2 alpha)``.

With ``restart=True`` an iteration that raises the objective is thrown away
and redone from the current iterate without extrapolation. That keeps the
objective trace non-increasing.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .channel import ChannelSet, effective_channel
from .codebook import (
    PhaseCodebook,
    check_weights,
    discretize_solution,
    phases_from_weights,
    uniform_weights,
)
from .objective import LinkBudget, RateModel, achievable_rate, check_precoder
from .projections import project_circle, project_frobenius_ball, project_simplex_rows

__all__ = [
    "OptimizerConfig",
    "StepUnderflow",
    "SolverFailure",
    "Step",
    "SolveResult",
    "ContinuousResult",
    "backtracking_step",
    "da_cbpg_solve",
    "continuous_phase_solve",
    "refit_precoder",
]

LN2 = np.log(2.0)


@dataclass(frozen=True)
class OptimizerConfig:
    max_iter: int = 500
    step0: float = 1.0
    shrink: float = 0.5
    growth: float = 2.0
    sufficient_decrease: float = 1.0
    tol: float = 1e-6
    restart: bool = True
    min_step: float = 1e-18
    # the precoder refit is cheap, so it runs much closer to its optimum
    refit_tol: float = 1e-12
    refit_max_iter: int = 5000

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.shrink < 1 < self.growth:
            raise ValueError("need 0 < shrink < 1 < growth")
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if self.tol < 0 or self.refit_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.refit_max_iter < 1:
            raise ValueError("refit_max_iter must be >= 1")
        if not 0 < self.sufficient_decrease <= 1:
            raise ValueError("sufficient_decrease must be in (0, 1]")


class StepUnderflow(RuntimeError):
    pass


class SolverFailure(RuntimeError):
    def __init__(self, message: str, trace: List[float]):
        super().__init__(message)
        self.trace = trace


class Step(NamedTuple):
    x: np.ndarray
    value: float
    alpha: float
    evals: int


def _rel_slack(f: float) -> float:
    # absorbs round-off when x+ and xbar differ only in the last bits
    return 1e-14 * max(1.0, abs(f))


def backtracking_step(
    fun: Callable[[np.ndarray], float],
    x_bar: np.ndarray,
    g: np.ndarray,
    alpha: float,
    prox: Callable[[np.ndarray], np.ndarray],
    *,
    f_bar: Optional[float] = None,
    shrink: float = 0.5,
    sufficient_decrease: float = 1.0,
    min_step: float = 1e-18,
) -> Step:
    """Largest ``alpha * shrink**n`` passing the proximal sufficient-decrease test."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if f_bar is None:
        f_bar = fun(x_bar)
    evals = 0
    while alpha >= min_step:
        x = prox(x_bar - alpha * g)
        d = x - x_bar
        fx = fun(x)
        evals += 1
        lin = float(np.real(np.vdot(g, d)))
        quad = sufficient_decrease * float(np.real(np.vdot(d, d))) / (2.0 * alpha)
        if fx <= f_bar + lin + quad + _rel_slack(f_bar):
            return Step(x, fx, alpha, evals)
        alpha *= shrink
    raise StepUnderflow(f"step size fell below {min_step:g}")


@dataclass
class _RisSpec:
    x0: np.ndarray
    to_phi: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]  # from c*diag(Z)
    prox: Callable[[np.ndarray], np.ndarray]


@dataclass
class _Run:
    F: np.ndarray
    x: Optional[np.ndarray]
    trace: List[float]
    iterations: int
    bt_evals: int
    restarts: int
    converged: bool


def _first_step(g, cfg: OptimizerConfig) -> float:
    # block curvatures span many decades; start from a move of length step0
    nrm = float(np.linalg.norm(g))
    return cfg.step0 / nrm if nrm > 0 else cfg.step0


def _accelerated_bcd(model: RateModel, F0, ris: Optional[_RisSpec], cfg: OptimizerConfig,
                     n_s: int, phi_fixed=None) -> _Run:
    ball = lambda X: project_frobenius_ball(X, n_s)  # noqa: E731
    F_prev = F = np.array(F0, dtype=np.complex128)
    if ris is not None:
        X_prev = X = np.array(ris.x0)
        phi = ris.to_phi(X)
    else:
        X_prev = X = None
        phi = np.zeros(0, np.complex128) if phi_fixed is None else np.asarray(phi_fixed, np.complex128)
    f_cur = model.value(F, phi)
    trace = [f_cur]
    aF = aX = None  # first call: normalized step of length step0
    k = 1
    it = bt = restarts = 0
    converged = False
    bt_kw = dict(shrink=cfg.shrink, sufficient_decrease=cfg.sufficient_decrease, min_step=cfg.min_step)
    try:
        while it < cfg.max_iter:
            it += 1
            w = k / (k + 3.0)
            P = F + w * (F - F_prev) if w else F
            fP, GP = model.value_grad_F(P, phi)
            gF = 2.0 * GP
            sF = backtracking_step(lambda Z: model.value(Z, phi), P, gF, aF or _first_step(gF, cfg),
                                   ball, f_bar=fP, **bt_kw)
            bt += sF.evals
            F_new, f_new = sF.x, sF.value
            X_new = X
            if ris is not None:
                Y = X + w * (X - X_prev) if w else X
                blk = model.ris_block(F_new)
                fY, zd = blk.value_zdiag(ris.to_phi(Y))
                gX = ris.grad(zd)
                sX = backtracking_step(lambda V: blk.value(ris.to_phi(V)), Y, gX,
                                       aX or _first_step(gX, cfg), ris.prox, f_bar=fY, **bt_kw)
                bt += sX.evals
                X_new, f_new = sX.x, sX.value
            if cfg.restart and f_new > f_cur:
                if w == 0:
                    converged = True  # no descent left even without momentum
                    break
                k = 0
                F_prev, X_prev = F, X
                restarts += 1
                continue
            aF = sF.alpha * cfg.growth
            if ris is not None:
                aX = sX.alpha * cfg.growth
                X_prev, X = X, X_new
                phi = ris.to_phi(X)
            F_prev, F = F, F_new
            trace.append(f_new)
            rel = abs(f_new - f_cur) / max(abs(f_cur), 1.0)
            f_cur = f_new
            k += 1
            if rel < cfg.tol:
                converged = True
                break
    except StepUnderflow as exc:
        raise SolverFailure(str(exc), trace) from exc
    return _Run(F, X, trace, it, bt, restarts, converged)


@dataclass(frozen=True)
class SolveResult:
    F: np.ndarray
    T: np.ndarray
    phi_relaxed: np.ndarray
    phi_discrete: np.ndarray
    F_discrete: np.ndarray
    rate_relaxed: float
    rate_discrete: float
    trace: List[float]
    iterations: int
    bt_evals: int
    restarts: int
    converged: bool
    wall_time: float

    @property
    def rate_trace(self) -> List[float]:
        return [max(-f / LN2, 0.0) for f in self.trace]

    def to_dict(self) -> dict:
        cplx = lambda a: [[float(v.real), float(v.imag)] for v in np.ravel(a)]  # noqa: E731
        return {
            "rate_relaxed": self.rate_relaxed,
            "rate_discrete": self.rate_discrete,
            "iterations": self.iterations,
            "bt_evals": self.bt_evals,
            "restarts": self.restarts,
            "converged": self.converged,
            "wall_time_s": self.wall_time,
            "F_shape": list(self.F.shape),
            "F": cplx(self.F),
            "F_discrete": cplx(self.F_discrete),
            "T": self.T.tolist(),
            "phi_relaxed": cplx(self.phi_relaxed),
            "phi_discrete": cplx(self.phi_discrete),
            "objective_trace": list(map(float, self.trace)),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "objective", "rate_bps_hz"])
            for i, (f, r) in enumerate(zip(self.trace, self.rate_trace)):
                w.writerow([i, repr(float(f)), repr(float(r))])


@dataclass(frozen=True)
class ContinuousResult:
    F: np.ndarray
    phi: np.ndarray
    rate: float
    trace: List[float] = field(repr=False)
    iterations: int = 0
    bt_evals: int = 0


def _initial_precoder(ch: ChannelSet, lb: LinkBudget, phi, n_s: int) -> np.ndarray:
    from .baselines import waterfilling_oracle

    return waterfilling_oracle(effective_channel(ch, phi), lb, n_s).F


def da_cbpg_solve(
    ch: ChannelSet,
    lb: LinkBudget,
    cb: PhaseCodebook,
    cfg: Optional[OptimizerConfig] = None,
    *,
    n_s: int = 2,
    F0=None,
    T0=None,
    refit: bool = True,
) -> SolveResult:
    """Joint precoder / discrete-phase optimization through the convex-hull relaxation.

    Defaults: ``T0`` uniform (RIS starts transparent, ``phi = 0``) and ``F0``
    the waterfilling precoder for the channel at ``T0``. The relaxed weights
    are rounded with `discretize_solution`; with ``refit=True`` the precoder
    is then re-optimized for the rounded phases.
    """
    cfg = cfg or OptimizerConfig()
    t_start = time.perf_counter()
    m = cb.size
    T0 = uniform_weights(ch.n_ris, m) if T0 is None else check_weights(T0, m)
    if F0 is None:
        F0 = _initial_precoder(ch, lb, phases_from_weights(T0, cb), n_s)
    else:
        n_s = np.shape(F0)[1]
        F0 = check_precoder(F0, n_s)
    model = RateModel(ch, lb)
    theta = cb.theta
    ris = None
    if ch.n_ris:
        ris = _RisSpec(
            x0=np.array(T0, dtype=float),
            to_phi=lambda T: T @ theta,
            grad=lambda zd: -2.0 * np.real(np.outer(zd, theta)),
            prox=project_simplex_rows,
        )
    run = _accelerated_bcd(model, F0, ris, cfg, n_s)
    T = run.x if ris is not None else np.zeros((0, m))
    phi_rel = phases_from_weights(T, cb)
    phi_disc = discretize_solution(T, cb)
    rate_rel = achievable_rate(run.F, effective_channel(ch, phi_rel), lb)
    F_disc = refit_precoder(ch, lb, phi_disc, cfg, run.F) if refit else run.F
    rate_disc = achievable_rate(F_disc, effective_channel(ch, phi_disc), lb)
    return SolveResult(
        F=run.F, T=T, phi_relaxed=phi_rel, phi_discrete=phi_disc, F_discrete=F_disc,
        rate_relaxed=rate_rel, rate_discrete=rate_disc, trace=run.trace,
        iterations=run.iterations, bt_evals=run.bt_evals, restarts=run.restarts,
        converged=run.converged, wall_time=time.perf_counter() - t_start,
    )


def continuous_phase_solve(
    ch: ChannelSet,
    lb: LinkBudget,
    amplitude: float = 1.0,
    cfg: Optional[OptimizerConfig] = None,
    *,
    n_s: int = 2,
    F0=None,
    phi0=None,
) -> ContinuousResult:
    """Same engine with unit-modulus phases ``|phi_i| = amplitude`` as the RIS block.

    ``phi0`` defaults to all elements at ``amplitude`` (zero phase).
    """
    cfg = cfg or OptimizerConfig()
    phi0 = np.full(ch.n_ris, amplitude, np.complex128) if phi0 is None else project_circle(phi0, amplitude)
    if F0 is None:
        F0 = _initial_precoder(ch, lb, phi0, n_s)
    else:
        n_s = np.shape(F0)[1]
    model = RateModel(ch, lb)
    ris = None
    if ch.n_ris:
        ris = _RisSpec(
            x0=phi0,
            to_phi=lambda p: p,
            grad=lambda zd: -2.0 * np.conj(zd),
            prox=lambda p: project_circle(p, amplitude),
        )
    run = _accelerated_bcd(model, F0, ris, cfg, n_s)
    phi = run.x if ris is not None else np.zeros(0, np.complex128)
    rate = achievable_rate(run.F, effective_channel(ch, phi), lb)
    return ContinuousResult(run.F, phi, rate, run.trace, run.iterations, run.bt_evals)


def refit_precoder(ch: ChannelSet, lb: LinkBudget, phi_fixed, cfg: Optional[OptimizerConfig], F_init):
    """Precoder-only accelerated proximal gradient with the RIS phases frozen.

    Runs to ``cfg.refit_tol`` / ``cfg.refit_max_iter`` rather than the joint
    solver's ``tol`` / ``max_iter``. Never returns a precoder worse than `F_init`.
    """
    cfg = cfg or OptimizerConfig()
    cfg = replace(cfg, tol=cfg.refit_tol, max_iter=cfg.refit_max_iter)
    F_init = np.asarray(F_init, dtype=np.complex128)
    n_s = F_init.shape[1]
    H = effective_channel(ch, phi_fixed)
    fixed = ChannelSet(H, np.zeros((0, H.shape[1])), np.zeros((H.shape[0], 0)))
    model = RateModel(fixed, lb)
    start = project_frobenius_ball(F_init, n_s)
    run = _accelerated_bcd(model, start, None, cfg, n_s)
    if model.value(run.F, None) <= model.value(F_init, None):
        return run.F
    return F_init
