"""Monte Carlo sweep driver, aggregation and CSV output.

Every (sweep value, trial) pair is one work unit. The unit draws a single
channel realization from stream ``trial`` and hands that same object to every
algorithm, so all labels are compared on identical channels. Results never
depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .baselines import BASELINE_LABELS, baseline_suite
from .channel import ChannelSet, generate_channel_set, read_channel_sets
from .config import ExperimentConfig, link_budget_from_config
from .numerics import RngStream
from .optimizer import SolverFailure, da_cbpg_solve

__all__ = [
    "ALGORITHMS",
    "STATIC_STREAM_OFFSET",
    "TrialRecord",
    "AggregateRow",
    "run_unit",
    "run_sweep",
    "aggregate",
    "emit_outputs",
    "read_records",
    "failure_fraction",
]

log = logging.getLogger(__name__)

ALGORITHMS = ("da-cbpg",) + BASELINE_LABELS
STATIC_STREAM_OFFSET = 1 << 32

RECORD_HEADER = ["sweep", "trial", "algorithm", "rate_bps_hz", "iters", "bt_evals", "wall_ms", "seed"]
AGGREGATE_HEADER = ["sweep", "algorithm", "mean_rate", "std_rate", "n"]
HASH_HEADER = ["sweep", "trial", "algorithm", "channel_hash"]


@dataclass(frozen=True)
class TrialRecord:
    sweep: int
    trial: int
    algorithm: str
    rate: float  # nan marks a failed solve
    iters: int
    bt_evals: int
    wall_ms: float
    seed: int
    channel_hash: str = ""

    @property
    def failed(self) -> bool:
        return math.isnan(self.rate)

    def sort_key(self):
        return (self.sweep, self.trial, ALGORITHMS.index(self.algorithm))


@dataclass(frozen=True)
class AggregateRow:
    sweep: int
    algorithm: str
    mean_rate: float
    std_rate: float
    n: int
    failures: int = 0


def _channel_for(cfg: ExperimentConfig, value: int, trial: int) -> ChannelSet:
    return generate_channel_set(RngStream(cfg.seed, trial), cfg.scenario_for(value))


def run_unit(cfg: ExperimentConfig, value: int, trial: int,
             channel: Optional[ChannelSet] = None) -> List[TrialRecord]:
    """All algorithms on one channel realization."""
    ch = channel if channel is not None else _channel_for(cfg, value, trial)
    digest = ch.digest()
    lb = link_budget_from_config(cfg)
    cb = cfg.codebook_for(value)
    n_s = cfg.link.n_streams
    ms = (lambda s: round(1e3 * s, 3)) if cfg.record_wall_time else (lambda s: 0.0)

    def rec(label, rate, iters=0, bt=0, wall=0.0):
        return TrialRecord(int(value), int(trial), label, float(rate), int(iters), int(bt), ms(wall),
                           cfg.seed, digest)

    out = []
    t0 = time.perf_counter()
    try:
        res = da_cbpg_solve(ch, lb, cb, cfg.optimizer, n_s=n_s)
        out.append(rec("da-cbpg", res.rate_discrete, res.iterations, res.bt_evals, res.wall_time))
    except SolverFailure as exc:
        log.warning("da-cbpg failed at sweep=%s trial=%s: %s", value, trial, exc)
        out.append(rec("da-cbpg", math.nan, wall=time.perf_counter() - t0))
    base = baseline_suite(ch, lb, cb, cfg.optimizer, n_s=n_s,
                          rng=RngStream(cfg.seed, STATIC_STREAM_OFFSET + trial))
    for label, o in base.items():
        out.append(rec(label, o.rate, o.iterations, o.bt_evals, o.wall_time))
    return out


def _run_unit_args(args):
    return run_unit(*args)


def run_sweep(cfg: ExperimentConfig, channels: Optional[Dict[Tuple[int, int], ChannelSet]] = None,
              progress: bool = False) -> List[TrialRecord]:
    """Run every (sweep value, trial) unit and return records in canonical order.

    `channels` maps ``(sweep value, trial)`` to frozen realizations, e.g. from
    ``read_channel_sets``; missing keys are generated as usual.
    """
    channels = channels or {}
    units = [(cfg, v, k, channels.get((v, k))) for v in cfg.sweep.values for k in range(cfg.trials)]
    records: List[TrialRecord] = []
    if cfg.workers == 1:
        for i, u in enumerate(units):
            records.extend(run_unit(*u))
            if progress and (i + 1) % max(1, len(units) // 20) == 0:
                log.info("%d/%d units done", i + 1, len(units))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for recs in pool.map(_run_unit_args, units, chunksize=max(1, len(units) // (8 * cfg.workers))):
                records.extend(recs)
    records.sort(key=TrialRecord.sort_key)
    return records


def load_frozen_channels(path) -> Dict[Tuple[int, int], ChannelSet]:
    return {(int(v), int(k)): ch for v, k, ch in read_channel_sets(path)}


def aggregate(records: Iterable[TrialRecord]) -> List[AggregateRow]:
    """Mean and sample standard deviation per (sweep value, algorithm); failures excluded."""
    groups: Dict[Tuple[int, str], List[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.sweep, r.algorithm), []).append(r)
    rows = []
    for (value, label), recs in sorted(groups.items(), key=lambda kv: (kv[0][0], ALGORITHMS.index(kv[0][1]))):
        rates = np.array([r.rate for r in recs if not r.failed])
        n = rates.size
        mean = float(rates.mean()) if n else math.nan
        std = float(rates.std(ddof=1)) if n > 1 else (0.0 if n == 1 else math.nan)
        rows.append(AggregateRow(value, label, mean, std, n, len(recs) - n))
    return rows


def failure_fraction(records: Sequence[TrialRecord]) -> float:
    return sum(r.failed for r in records) / len(records) if records else 0.0


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_outputs(aggregates: Sequence[AggregateRow], records: Sequence[TrialRecord], out_dir,
                 cfg: Optional[ExperimentConfig] = None) -> Dict[str, Path]:
    """Write ``records.csv``, ``aggregate.csv``, ``channel_hashes.csv`` and ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in ("records.csv", "aggregate.csv", "channel_hashes.csv", "manifest.json")}
    with open(paths["records.csv"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in records:
            w.writerow([r.sweep, r.trial, r.algorithm, _fmt(r.rate), r.iters, r.bt_evals, _fmt(r.wall_ms), r.seed])
    with open(paths["aggregate.csv"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for a in aggregates:
            w.writerow([a.sweep, a.algorithm, _fmt(a.mean_rate), _fmt(a.std_rate), a.n])
    with open(paths["channel_hashes.csv"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HASH_HEADER)
        for r in records:
            w.writerow([r.sweep, r.trial, r.algorithm, r.channel_hash])
    manifest = {
        "software": {"package": "risopt", "version": __version__, "kernel_backend": BACKEND,
                     "python": platform.python_version(), "numpy": np.__version__},
        "config": cfg.to_dict() if cfg is not None else None,
        "records": len(records),
        "failures": {a.algorithm + "@" + str(a.sweep): a.failures for a in aggregates if a.failures},
    }
    paths["manifest.json"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths


def read_records(path, hashes_path=None) -> List[TrialRecord]:
    """Parse a ``records.csv`` written by `emit_outputs` (optionally joining channel hashes)."""
    hashes = {}
    if hashes_path is not None:
        with open(hashes_path, newline="") as fh:
            for row in csv.DictReader(fh):
                hashes[(int(row["sweep"]), int(row["trial"]), row["algorithm"])] = row["channel_hash"]
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RECORD_HEADER:
            raise ValueError(f"unexpected header {header}")
        for row in reader:
            key = (int(row[0]), int(row[1]), row[2])
            out.append(TrialRecord(key[0], key[1], key[2], float(row[3]), int(row[4]), int(row[5]),
                                   float(row[6]), int(row[7]), hashes.get(key, "")))
    return out
