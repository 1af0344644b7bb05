"""Quick oracle and invariant checks run by ``risopt validate``."""

from __future__ import annotations

from typing import Callable, List, NamedTuple

import numpy as np

from .baselines import waterfilling_oracle
from .channel import ArrayConfig, ChannelModelParams, Scenario, ScenarioGeometry, effective_channel, generate_channel_set
from .codebook import PhaseCodebook, phases_from_weights
from .numerics import RngStream, hermitian_logdet, pd_solve
from .objective import LinkBudget, achievable_rate, fd_gradient_oracle, grad_F, grad_t, objective_f
from .optimizer import OptimizerConfig, da_cbpg_solve, refit_precoder
from .oracles import logdet_eig, simplex_projection_enum
from .projections import project_frobenius_ball, project_simplex


class Check(NamedTuple):
    name: str
    ok: bool
    detail: str


def _rel(a, b) -> float:
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / max(np.linalg.norm(np.ravel(b)), 1e-12))


def desk_scenario(n_tx=16, n_rx=8, n_ris=32, tx_rows=None, rx_rows=2, ris_rows=4) -> Scenario:
    geo = ScenarioGeometry()
    d = geo.wavelength / 2
    return Scenario(geo, ArrayConfig(n_tx, d, tx_rows), ArrayConfig(n_rx, d, rx_rows),
                    ArrayConfig(n_ris, d, ris_rows), ChannelModelParams())


def _random_point(gen, n_tx, n_s, n_ris, m):
    F = gen.standard_normal((n_tx, n_s)) + 1j * gen.standard_normal((n_tx, n_s))
    F *= np.sqrt(n_s) * gen.uniform(0.3, 1.0) / np.linalg.norm(F)
    T = gen.random((n_ris, m)) + 0.05
    return F, T / T.sum(axis=1, keepdims=True)


def _check_numerics(gen) -> str:
    worst = 0.0
    for n in (2, 5, 16):
        B = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
        A = B.conj().T @ B + np.eye(n)
        worst = max(worst, abs(hermitian_logdet(A) - logdet_eig(A)) / abs(logdet_eig(A)))
        X = pd_solve(A, np.eye(n))
        assert np.linalg.norm(A @ X - np.eye(n)) / np.sqrt(n) <= 1e-10
        assert abs(hermitian_logdet(A) + hermitian_logdet(X)) <= 1e-8
    assert worst <= 1e-10, worst
    return f"max rel logdet error {worst:.1e}"


def _check_projections(gen) -> str:
    worst = 0.0
    for _ in range(200):
        x = gen.normal(0, 2, gen.integers(1, 7))
        worst = max(worst, float(np.max(np.abs(project_simplex(x) - simplex_projection_enum(x)))))
        X = gen.standard_normal((4, 2)) * gen.uniform(0.1, 3)
        P = project_frobenius_ball(X, 2)
        assert np.array_equal(project_frobenius_ball(P, 2), P)
        assert np.linalg.norm(P) ** 2 <= 2 + 1e-10
    assert worst <= 1e-9, worst
    return f"simplex max abs error {worst:.1e}"


def _check_gradients(gen) -> str:
    worst = 0.0
    lb = LinkBudget(0.5, 10 ** ((-174 + 10 * np.log10(800e6) - 30) / 10))
    cb = PhaseCodebook(1.0, 2)
    for k in range(5):
        ch = generate_channel_set(RngStream(11, k), desk_scenario(8, 4, 8, tx_rows=2, rx_rows=2, ris_rows=2))
        F, T = _random_point(gen, 8, 2, 8, cb.size)
        phi = phases_from_weights(T, cb)
        gF = grad_F(F, phi, ch, lb)
        worst = max(worst, _rel(fd_gradient_oracle(lambda X: objective_f(X, phi, ch, lb), F), gF))
        gt = grad_t(F, T.ravel(), cb, ch, lb)
        fd = fd_gradient_oracle(lambda t: objective_f(F, phases_from_weights(t, cb), ch, lb), T.ravel())
        worst = max(worst, _rel(fd, gt))
    assert worst <= 1e-6, worst
    return f"max rel gradient error {worst:.1e}"


def _check_solver(gen) -> str:
    lb = LinkBudget(0.5, 10 ** ((-174 + 10 * np.log10(800e6) - 30) / 10))
    cb = PhaseCodebook(1.0, 1)
    ch = generate_channel_set(RngStream(5, 0), desk_scenario())
    res = da_cbpg_solve(ch, lb, cb, OptimizerConfig(), n_s=2)
    assert np.all(np.diff(res.trace) <= 0), "objective trace increased"
    assert np.linalg.norm(res.F) ** 2 <= 2 + 1e-9
    H = effective_channel(ch, res.phi_discrete)
    wf = waterfilling_oracle(H, lb, 2)
    F0 = project_frobenius_ball(gen.standard_normal((16, 2)) + 0j, 2)
    r = achievable_rate(refit_precoder(ch, lb, res.phi_discrete, OptimizerConfig(), F0), H, lb)
    assert r >= 0.995 * wf.rate, (r, wf.rate)
    return f"rate {res.rate_discrete:.3f} b/s/Hz, refit/waterfilling {r / wf.rate:.4f}"


CHECKS: List[tuple] = [
    ("log-det and PD solve vs eigenvalue oracle", _check_numerics),
    ("simplex and Frobenius-ball projections", _check_projections),
    ("closed-form gradients vs central differences", _check_gradients),
    ("solver monotonicity and precoder refit", _check_solver),
]


def run_checks(seed: int = 0, report: Callable[[str], None] = print) -> List[Check]:
    out = []
    for name, fn in CHECKS:
        gen = np.random.default_rng(seed)
        try:
            detail = fn(gen)
            out.append(Check(name, True, detail))
        except AssertionError as exc:
            out.append(Check(name, False, f"assertion failed: {exc}"))
        c = out[-1]
        report(f"{'PASS' if c.ok else 'FAIL'}  {c.name}  ({c.detail})")
    return out
