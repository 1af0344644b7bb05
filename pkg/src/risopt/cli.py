"""Command line entry point: ``risopt {solve,sweep,gen-channels,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .channel import generate_channel_set, write_channel_sets
from .config import ConfigError, link_budget_from_config, load_config
from .numerics import RngStream
from .optimizer import SolverFailure, da_cbpg_solve

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _cmd_solve(args) -> int:
    cfg = load_config(args.config)
    value = args.value if args.value is not None else cfg.sweep.values[0]
    if args.channels:
        frozen = harness.load_frozen_channels(args.channels)
        if (value, args.trial) not in frozen:
            print(f"no frozen channel for sweep={value} trial={args.trial}", file=sys.stderr)
            return EXIT_CONFIG
        ch = frozen[(value, args.trial)]
    else:
        ch = generate_channel_set(RngStream(cfg.seed, args.trial), cfg.scenario_for(value))
    lb = link_budget_from_config(cfg)
    cb = cfg.codebook_for(value)
    try:
        res = da_cbpg_solve(ch, lb, cb, cfg.optimizer, n_s=cfg.link.n_streams)
    except SolverFailure as exc:
        print(f"solver failure: {exc} after {len(exc.trace) - 1} iterations", file=sys.stderr)
        return EXIT_SOLVER
    print(f"channel     N_tx={ch.n_tx} N_rx={ch.n_rx} N_ris={ch.n_ris} bits={cb.bits} "
          f"seed={cfg.seed} trial={args.trial} hash={ch.digest()}")
    print(f"rate        relaxed {res.rate_relaxed:.4f}  discrete+refit {res.rate_discrete:.4f} bits/s/Hz")
    print(f"iterations  {res.iterations} (restarts {res.restarts}, backtracking evals {res.bt_evals}, "
          f"converged {res.converged})")
    print(f"precoder    ||F||_F^2 = {np.linalg.norm(res.F_discrete) ** 2:.6f}")
    print(f"wall time   {1e3 * res.wall_time:.1f} ms")
    if args.json:
        Path(args.json).write_text(res.to_json(indent=2) + "\n")
    if args.trace_csv:
        res.write_trace_csv(args.trace_csv)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = cfg.replace(**overrides)
    out = args.out or cfg.output
    channels = harness.load_frozen_channels(args.channels) if args.channels else None
    records = harness.run_sweep(cfg, channels, progress=True)
    aggs = harness.aggregate(records)
    harness.emit_outputs(aggs, records, out, cfg)
    for a in aggs:
        print(f"{a.sweep:>6} {a.algorithm:<17} mean {a.mean_rate:8.4f}  std {a.std_rate:7.4f}  n={a.n}")
    frac = harness.failure_fraction(records)
    if frac > cfg.max_failure_fraction:
        print(f"failure fraction {frac:.3f} exceeds {cfg.max_failure_fraction}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_gen_channels(args) -> int:
    cfg = load_config(args.config)
    if args.trials is not None:
        cfg = cfg.replace(trials=args.trials)
    items = ((v, k, generate_channel_set(RngStream(cfg.seed, k), cfg.scenario_for(v)))
             for v in cfg.sweep.values for k in range(cfg.trials))
    n = write_channel_sets(args.out, items)
    print(f"wrote {n} channel sets to {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .selfcheck import run_checks

    checks = run_checks(seed=args.seed)
    return EXIT_OK if all(c.ok for c in checks) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risopt", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimize one channel realization and print a summary")
    s.add_argument("--config", default="fig2.cfg")
    s.add_argument("--value", type=int, default=None, help="sweep value (RIS size or bits); default: first")
    s.add_argument("--trial", type=int, default=0)
    s.add_argument("--channels", help="frozen channel file from gen-channels")
    s.add_argument("--json", help="write the full SolveResult as JSON")
    s.add_argument("--trace-csv", help="write the per-iteration objective trace")
    s.set_defaults(func=_cmd_solve)

    s = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (default: config 'output')")
    s.add_argument("--trials", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--channels", help="frozen channel file from gen-channels")
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("gen-channels", help="freeze channel realizations to a binary file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--trials", type=int)
    s.set_defaults(func=_cmd_gen_channels)

    s = sub.add_parser("validate", help="run the oracle / invariant self-test")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
