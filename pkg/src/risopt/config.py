"""Experiment configuration: JSON-shaped ``.cfg`` files with defaults for every key.

Only ``sweep`` and ``trials`` are required. Unknown keys are rejected. See
``docs/config.md`` for the full schema.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .channel import ArrayConfig, ChannelModelParams, Scenario, ScenarioGeometry
from .codebook import PhaseCodebook
from .objective import LinkBudget
from .optimizer import OptimizerConfig

__all__ = [
    "ConfigError",
    "ParseError",
    "ValidationError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "link_budget_from_config",
    "shipped_config_path",
]

THERMAL_NOISE_DBM_HZ = -174.0
SWEEP_AXES = ("ris_elements", "bits")


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    def __init__(self, field_name: str, message: str = "invalid value"):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioSection:
    tx_position: Tuple[float, float] = (0.0, 0.0)
    rx_position: Tuple[float, float] = (50.0, 0.0)
    ris_position: Tuple[float, float] = (40.0, 10.0)
    frequency_hz: float = 28e9
    bandwidth_hz: float = 800e6


@dataclass(frozen=True)
class ArraysSection:
    n_tx: int = 64
    n_rx: int = 16
    n_ris: int = 64
    tx_rows: Optional[int] = None
    rx_rows: Optional[int] = None
    ris_rows: Optional[int] = None
    spacing_wavelengths: float = 0.5


@dataclass(frozen=True)
class ChannelSection:
    k_rice: float = 10.0
    n_ray: int = 10
    gamma_los: float = 1.90
    gamma_nlos: float = 4.39
    g_tx: float = 1.0
    g_rx: float = 1.0
    a_ris_m2: Optional[float] = None
    k_abs_per_m: float = 0.0
    direct_has_los: bool = False


@dataclass(frozen=True)
class LinkSection:
    p_tx_dbm: float = 30.0
    noise_figure_db: float = 0.0
    n_streams: int = 2


@dataclass(frozen=True)
class CodebookSection:
    amplitude: float = 1.0
    bits: int = 1


@dataclass(frozen=True)
class SweepSection:
    axis: str
    values: Tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    sweep: SweepSection
    trials: int
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    arrays: ArraysSection = field(default_factory=ArraysSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    link: LinkSection = field(default_factory=LinkSection)
    codebook: CodebookSection = field(default_factory=CodebookSection)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    output: str = "results"
    workers: int = 1
    record_wall_time: bool = False
    max_failure_fraction: float = 0.0

    # -- derived objects -------------------------------------------------

    def geometry(self) -> ScenarioGeometry:
        s = self.scenario
        return ScenarioGeometry(tuple(s.tx_position), tuple(s.rx_position), tuple(s.ris_position),
                                s.frequency_hz, s.bandwidth_hz)

    def scenario_for(self, value) -> Scenario:
        geo = self.geometry()
        a = self.arrays
        spacing = a.spacing_wavelengths * geo.wavelength
        n_ris = int(value) if self.sweep.axis == "ris_elements" else a.n_ris
        c = self.channel
        params = ChannelModelParams(c.k_rice, c.n_ray, c.gamma_los, c.gamma_nlos, c.g_tx, c.g_rx,
                                    c.a_ris_m2, c.k_abs_per_m, c.direct_has_los)
        return Scenario(geo, ArrayConfig(a.n_tx, spacing, a.tx_rows), ArrayConfig(a.n_rx, spacing, a.rx_rows),
                        ArrayConfig(n_ris, spacing, a.ris_rows), params)

    def codebook_for(self, value) -> PhaseCodebook:
        bits = int(value) if self.sweep.axis == "bits" else self.codebook.bits
        return PhaseCodebook(self.codebook.amplitude, bits)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        """Copy with top-level or dotted ``section.key`` overrides, re-validated."""
        d = self.to_dict()
        for key, value in changes.items():
            target = d
            *parents, leaf = key.split(".")
            for p in parents:
                target = target[p]
            target[leaf] = value
        return parse_config(d)


_SECTIONS = {
    "scenario": ScenarioSection,
    "arrays": ArraysSection,
    "channel": ChannelSection,
    "link": LinkSection,
    "codebook": CodebookSection,
    "optimizer": OptimizerConfig,
    "sweep": SweepSection,
}
_REQUIRED = ("sweep", "trials")


def _section(cls, raw, name: str):
    if not isinstance(raw, dict):
        raise ValidationError(name, "expected an object")
    known = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ValidationError(f"{name}.{key}", "unknown key")
    kwargs = {}
    for key, value in raw.items():
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        missing = [f.name for f in fields(cls) if f.name not in raw
                   and f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING]
        raise ValidationError(f"{name}.{missing[0]}" if missing else name, str(exc)) from None
    except ValueError as exc:
        raise ValidationError(name, str(exc)) from None


def _require(cond: bool, name: str, message: str):
    if not cond:
        raise ValidationError(name, message)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _validate(cfg: ExperimentConfig) -> None:
    _require(_is_int(cfg.trials) and cfg.trials >= 1, "trials", "must be an integer >= 1")
    _require(_is_int(cfg.seed) and cfg.seed >= 0, "seed", "must be a non-negative integer")
    _require(_is_int(cfg.workers) and cfg.workers >= 1, "workers", "must be an integer >= 1")
    _require(0.0 <= cfg.max_failure_fraction <= 1.0, "max_failure_fraction", "must be in [0, 1]")

    sw = cfg.sweep
    _require(sw.axis in SWEEP_AXES, "sweep.axis", f"must be one of {SWEEP_AXES}")
    _require(isinstance(sw.values, tuple) and len(sw.values) > 0, "sweep.values", "must be a non-empty list")
    _require(all(_is_int(v) for v in sw.values), "sweep.values", "must be integers")
    _require(all(b > a for a, b in zip(sw.values, sw.values[1:])), "sweep.values", "must be strictly increasing")

    ln = cfg.link
    _require(math.isfinite(ln.p_tx_dbm), "link.p_tx_dbm", "must be finite")
    _require(math.isfinite(ln.noise_figure_db), "link.noise_figure_db", "must be finite")
    _require(_is_int(ln.n_streams) and ln.n_streams >= 1, "link.n_streams", "must be an integer >= 1")
    _require(cfg.codebook.amplitude > 0, "codebook.amplitude", "must be positive")
    _require(_is_int(cfg.codebook.bits) and cfg.codebook.bits >= 1, "codebook.bits", "must be an integer >= 1")
    _require(cfg.arrays.spacing_wavelengths > 0, "arrays.spacing_wavelengths", "must be positive")

    try:
        cfg.geometry()
    except ValueError as exc:
        raise ValidationError("scenario", str(exc)) from None
    for v in sw.values:
        if sw.axis == "bits":
            _require(v >= 1, "sweep.values", "bit counts must be >= 1")
        try:
            cfg.scenario_for(v)
            cfg.codebook_for(v)
        except ValueError as exc:
            raise ValidationError("sweep.values" if sw.axis == "ris_elements" else "arrays", str(exc)) from None
    try:
        link_budget_from_config(cfg)
    except ValueError as exc:
        raise ValidationError("link", str(exc)) from None


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "expected an object")
    for key in _REQUIRED:
        if key not in raw:
            raise ValidationError(key, "required key is missing")
    known = {f.name for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ValidationError(key, "unknown key")
        kwargs[key] = _section(_SECTIONS[key], value, key) if key in _SECTIONS else value
    cfg = ExperimentConfig(**kwargs)
    _validate(cfg)
    return cfg


def shipped_config_path(name: str) -> Path:
    """Path of a config bundled with the package (``fig2.cfg``, ``fig3.cfg``)."""
    return Path(str(resources.files("risopt") / "configs" / name))


def load_config(path) -> ExperimentConfig:
    """Read and validate a config file.

    A bare name such as ``fig2.cfg`` that does not exist on disk falls back to
    the copy shipped inside the package.
    """
    p = Path(path)
    if not p.exists():
        shipped = shipped_config_path(p.name if p.suffix else p.name + ".cfg")
        if shipped.exists() and p.parent == Path("."):
            p = shipped
    text = p.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return parse_config(raw)


def link_budget_from_config(cfg: ExperimentConfig) -> LinkBudget:
    """Equal power split over streams; thermal noise ``-174 dBm/Hz + 10 log10(B) + NF``."""
    ln = cfg.link
    p_total = 10.0 ** ((ln.p_tx_dbm - 30.0) / 10.0)
    noise_dbm = THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(cfg.scenario.bandwidth_hz) + ln.noise_figure_db
    return LinkBudget(p_total / ln.n_streams, 10.0 ** ((noise_dbm - 30.0) / 10.0))
