"""Compare the numba kernels with the numpy fallback.

Part 1 times each kernel at solver-representative sizes under both
implementations and checks that they agree. Part 2 times full solves in a
fresh interpreter per backend (the backend is fixed at import time).

    python benchmarks/bench_kernels.py [--repeat 200] [--solves 20]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from risopt import _kernels

SOLVE_SNIPPET = """
import time
from risopt import _kernels
from risopt.config import link_budget_from_config, load_config
from risopt.channel import generate_channel_set
from risopt.numerics import RngStream
from risopt.optimizer import da_cbpg_solve
cfg = load_config("fig2.cfg")
lb = link_budget_from_config(cfg)
chans = [generate_channel_set(RngStream(cfg.seed, k), cfg.scenario_for({n_ris})) for k in range({solves})]
cb = cfg.codebook_for({n_ris})
da_cbpg_solve(chans[0], lb, cb)  # warm-up / JIT
t = time.perf_counter()
rates = [da_cbpg_solve(ch, lb, cb).rate_discrete for ch in chans]
print(_kernels.BACKEND, (time.perf_counter() - t) / len(chans), sum(rates) / len(rates))
"""


def kernel_cases(gen):
    c = lambda *s: gen.standard_normal(s) + 1j * gen.standard_normal(s)  # noqa: E731
    hf = c(16, 2)
    L = _kernels.numpy_impl.neg_logdet_gram(hf, 1e3)[1]
    return {
        "neg_logdet_gram 16x2": ("neg_logdet_gram", (hf, 1e3)),
        "chol_solve 2x2 / 2x16": ("chol_solve", (L, np.ascontiguousarray(hf.conj().T))),
        "simplex_rows 196x8": ("simplex_rows", (gen.normal(0, 1, (196, 8)),)),
        "diag_product 196x2 . 2x196": ("diag_product", (c(196, 2), c(2, 196))),
        "cascade rx16 ris196 ns2": ("cascade", (c(16, 2), c(16, 196), c(196), c(196, 2))),
    }


def _close(a, b):
    if isinstance(a, tuple):
        return all(_close(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-12)


def bench_kernels(repeat: int) -> bool:
    impls = {"numpy": _kernels.numpy_impl, "numba": _kernels.numba_impl}
    cases = kernel_cases(np.random.default_rng(0))
    all_ok = True
    print(f"{'kernel':<28} {'numpy us':>10} {'numba us':>10} {'speedup':>8}  agree")
    for label, (name, args) in cases.items():
        times, outs = {}, {}
        for backend, impl in impls.items():
            fn = getattr(impl, name)
            outs[backend] = fn(*args)  # also triggers compilation
            times[backend] = min(timeit.repeat(lambda: fn(*args), number=repeat, repeat=3)) / repeat * 1e6
        ok = _close(outs["numpy"], outs["numba"])
        all_ok &= ok
        print(f"{label:<28} {times['numpy']:>10.2f} {times['numba']:>10.2f} "
              f"{times['numpy'] / times['numba']:>7.1f}x  {ok}")
    return all_ok


def bench_solves(solves: int, n_ris: int) -> None:
    print(f"\nfull da_cbpg_solve, fig2 geometry, N_ris={n_ris}, {solves} channels")
    for flag in ("0", "1"):
        env = dict(os.environ, RISOPT_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET.format(n_ris=n_ris, solves=solves)],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<6} {1e3 * float(out[1]):8.2f} ms/solve   mean rate {float(out[2]):.6f} bits/s/Hz")


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=200)
    p.add_argument("--solves", type=int, default=20)
    p.add_argument("--n-ris", type=int, default=100)
    args = p.parse_args(argv)
    if _kernels.numba_impl is None:
        print("numba is not installed; nothing to compare")
        return 1
    ok = bench_kernels(args.repeat)
    bench_solves(args.solves, args.n_ris)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
