"""Acceptance criteria 1-8, each at its stated size and tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line; the lines are
repeated in the pytest terminal summary.
"""

import time

import numpy as np
import pytest

from helpers import random_precoder, random_weights, small_geometric, tiny_instance
from risopt import cli
from risopt.baselines import baseline_suite, exhaustive_discrete_oracle, waterfilling_oracle
from risopt.channel import effective_channel, generate_channel_set
from risopt.codebook import PhaseCodebook, phases_from_weights
from risopt.config import load_config
from risopt.harness import STATIC_STREAM_OFFSET, aggregate, read_records, run_sweep
from risopt.numerics import RngStream
from risopt.objective import achievable_rate, fd_gradient_oracle, grad_F, grad_t, objective_f
from risopt.optimizer import OptimizerConfig, da_cbpg_solve, refit_precoder
from risopt.oracles import simplex_projection_enum
from risopt.projections import project_frobenius_ball, project_simplex
from risopt.selfcheck import desk_scenario


def rel_err(a, b):
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / max(np.linalg.norm(np.ravel(b)), 1e-12))


def means(aggs):
    return {(a.sweep, a.algorithm): a.mean_rate for a in aggs}


def test_gradient_correctness(lb, report):
    t0 = time.perf_counter()
    gen = np.random.default_rng(1)
    cb = PhaseCodebook(1.0, 2)
    worst_F = worst_t = 0.0
    for k in range(100):
        ch = small_geometric(k)  # N_tx=8, N_rx=4, N_ris=8
        F = random_precoder(gen, 8, 2)
        t = random_weights(gen, 8, cb.size).ravel()
        phi = phases_from_weights(t, cb)
        worst_F = max(worst_F, rel_err(fd_gradient_oracle(lambda X: objective_f(X, phi, ch, lb), F),
                                       grad_F(F, phi, ch, lb)))
        fd_t = fd_gradient_oracle(lambda x: objective_f(F, phases_from_weights(x, cb), ch, lb), t)
        worst_t = max(worst_t, rel_err(fd_t, grad_t(F, t, cb, ch, lb)))
    elapsed = time.perf_counter() - t0
    ok = worst_F <= 1e-6 and worst_t <= 1e-6 and elapsed <= 60
    assert report(1, "gradient correctness", ok,
                  f"max rel error grad_F {worst_F:.1e}, grad_t {worst_t:.1e}; {elapsed:.1f} s")


def test_projection_exactness(report):
    t0 = time.perf_counter()
    gen = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        x = gen.normal(0, gen.uniform(0.1, 5), gen.integers(1, 7))
        worst = max(worst, float(np.max(np.abs(project_simplex(x) - simplex_projection_enum(x)))))
    ball_ok = 0
    for _ in range(1000):
        n_s = int(gen.integers(1, 5))
        shape = (int(gen.integers(1, 9)), n_s)
        X = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) * gen.uniform(0.01, 10)
        P = project_frobenius_ball(X, n_s)
        ball_ok += np.array_equal(project_frobenius_ball(P, n_s), P) and np.linalg.norm(P) ** 2 <= n_s
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and ball_ok == 1000 and elapsed <= 10
    assert report(2, "projection exactness", ok,
                  f"simplex max abs error {worst:.1e}; ball idempotent+feasible {ball_ok}/1000; {elapsed:.1f} s")


def test_monotone_convergence(lb, report):
    t0 = time.perf_counter()
    cb = PhaseCodebook(1.0, 1)
    scen = desk_scenario()  # N_tx=16, N_rx=8, N_ris=32
    monotone = 0
    restarts = 0
    for k in range(100):
        res = da_cbpg_solve(generate_channel_set(RngStream(3, k), scen), lb, cb, OptimizerConfig(restart=True))
        monotone += bool(np.all(np.diff(res.trace) <= 0))
        restarts += res.restarts
    elapsed = time.perf_counter() - t0
    ok = monotone == 100 and elapsed <= 300
    assert report(3, "monotone convergence", ok,
                  f"non-increasing traces {monotone}/100, {restarts} momentum restarts; {elapsed:.1f} s")


def test_small_instance_optimality_gap(lb, report):
    t0 = time.perf_counter()
    cb = PhaseCodebook(1.0, 1)
    ratios = {"da-cbpg": [], "static-ris": [], "cont-quantized": []}
    below_no_ris = 0
    for s in range(50):
        ch = tiny_instance(s)  # N_tx=4, N_rx=2, N_ris=6
        best = exhaustive_discrete_oracle(ch, lb, cb, 2)[1]
        da = da_cbpg_solve(ch, lb, cb).rate_discrete
        base = baseline_suite(ch, lb, cb, rng=RngStream(7, STATIC_STREAM_OFFSET + s))
        ratios["da-cbpg"].append(da / best)
        ratios["static-ris"].append(base["static-ris"].rate / best)
        ratios["cont-quantized"].append(base["cont-quantized"].rate / best)
        below_no_ris += da < base["no-ris"].rate
    m = {k: float(np.mean(v)) for k, v in ratios.items()}
    elapsed = time.perf_counter() - t0
    ok = m["da-cbpg"] > m["static-ris"] and m["da-cbpg"] > m["cont-quantized"] and below_no_ris == 0 \
        and elapsed <= 120
    assert report(4, "small-instance optimality gap", ok,
                  f"mean ratio to exhaustive: da-cbpg {m['da-cbpg']:.4f}, cont-quantized "
                  f"{m['cont-quantized']:.4f}, static {m['static-ris']:.4f}; min da-cbpg "
                  f"{min(ratios['da-cbpg']):.4f}; below no-RIS {below_no_ris}/50; {elapsed:.1f} s")


def test_ris_size_trend(report):
    t0 = time.perf_counter()
    cfg = load_config("fig2.cfg").replace(trials=200, **{"sweep.values": [16, 36, 64, 100],
                                                          "codebook.bits": 1, "link.p_tx_dbm": 30.0})
    assert (cfg.arrays.n_tx, cfg.arrays.n_rx) == (64, 16)
    mu = means(aggregate(run_sweep(cfg)))
    order_ok = all(mu[v, "da-cbpg"] > mu[v, "cont-quantized"] > mu[v, "static-ris"] > mu[v, "no-ris"]
                   for v in cfg.sweep.values)
    da = [mu[v, "da-cbpg"] for v in cfg.sweep.values]
    increasing = all(b > a for a, b in zip(da, da[1:]))
    elapsed = time.perf_counter() - t0
    table = "; ".join(f"N_ris={v}: " + "/".join(f"{mu[v, a]:.3f}" for a in
                                                 ("da-cbpg", "cont-quantized", "static-ris", "no-ris"))
                      for v in cfg.sweep.values)
    ok = order_ok and increasing and elapsed <= 1800
    assert report(5, "rate vs RIS size trend", ok,
                  f"mean da/cont-q/static/no-ris {table}; ordering {order_ok}, increasing {increasing}; "
                  f"{elapsed:.0f} s")


def test_quantization_bits_trend(report):
    t0 = time.perf_counter()
    cfg = load_config("fig3.cfg").replace(trials=100)
    assert cfg.arrays.n_ris == 196 and cfg.sweep.values == (1, 2, 3)
    mu = means(aggregate(run_sweep(cfg)))
    bits = cfg.sweep.values
    gap = [mu[b, "cont-unquantized"] - mu[b, "da-cbpg"] for b in bits]
    adv = [mu[b, "da-cbpg"] - mu[b, "cont-quantized"] for b in bits]
    shrinking = all(g2 < g1 for g1, g2 in zip(gap, gap[1:]))
    largest_at_1 = int(np.argmax(adv)) == 0
    elapsed = time.perf_counter() - t0
    ok = shrinking and largest_at_1 and elapsed <= 1800
    assert report(6, "rate vs quantization bits trend", ok,
                  "gap to unquantized " + "/".join(f"{g:.3f}" for g in gap)
                  + "; advantage over cont-quantized " + "/".join(f"{a:.4f}" for a in adv)
                  + f" (bits {bits}); {elapsed:.0f} s")


def test_precoder_refit(lb, report):
    t0 = time.perf_counter()
    gen = np.random.default_rng(7)
    scen = desk_scenario()
    worst = np.inf
    for k in range(50):
        ch = generate_channel_set(RngStream(8, k), scen)
        cb = PhaseCodebook(1.0, int(gen.integers(1, 4)))
        phi = cb.theta[gen.integers(0, cb.size, ch.n_ris)]
        H = effective_channel(ch, phi)
        F = refit_precoder(ch, lb, phi, OptimizerConfig(), random_precoder(gen, ch.n_tx, 2))
        worst = min(worst, achievable_rate(F, H, lb) / waterfilling_oracle(H, lb, 2).rate)
    elapsed = time.perf_counter() - t0
    ok = worst >= 0.995 and elapsed <= 60
    assert report(7, "precoder refit vs waterfilling", ok,
                  f"worst refit/waterfilling rate ratio {worst:.6f} over 50 instances; {elapsed:.1f} s")


def test_determinism_and_pairing(tmp_path, report):
    outs = []
    for run, workers in (("a", "1"), ("b", "1"), ("c", "2")):
        out = tmp_path / run
        assert cli.main(["sweep", "--config", "fig2.cfg", "--trials", "2", "--workers", workers,
                         "--out", str(out)]) == cli.EXIT_OK
        outs.append(out)
    names = ("records.csv", "aggregate.csv", "channel_hashes.csv")
    identical = all((outs[0] / n).read_bytes() == (o / n).read_bytes() for o in outs[1:] for n in names)
    recs = read_records(outs[0] / "records.csv", outs[0] / "channel_hashes.csv")
    hashes = {}
    for r in recs:
        hashes.setdefault((r.sweep, r.trial), set()).add(r.channel_hash)
    paired = all(len(h) == 1 and "" not in h for h in hashes.values())
    distinct = len({next(iter(h)) for h in hashes.values()}) == len(hashes)
    ok = identical and paired and distinct and len(recs) == 6 * 2 * 5
    assert report(8, "determinism and pairing", ok,
                  f"3 runs (workers 1,1,2) bitwise identical {identical}; one hash per (sweep,trial) {paired} "
                  f"across {len(hashes)} units; {len(recs)} records")
