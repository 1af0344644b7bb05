"""Clustered geometric mmWave channel synthesis for the tx / RIS / rx triangle."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np

from .numerics import DimensionMismatch, RngStream, as_cmatrix, sample_cgaussian

__all__ = [
    "SPEED_OF_LIGHT",
    "ScenarioGeometry",
    "ArrayConfig",
    "ChannelModelParams",
    "Scenario",
    "ChannelSet",
    "steering_vector",
    "steering_matrix",
    "path_loss",
    "synthesize_link",
    "effective_channel",
    "generate_channel_set",
    "write_channel_sets",
    "read_channel_sets",
    "rayleigh_channel_set",
]

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ScenarioGeometry:
    tx: Tuple[float, float] = (0.0, 0.0)
    rx: Tuple[float, float] = (50.0, 0.0)
    ris: Tuple[float, float] = (40.0, 10.0)
    frequency: float = 28e9
    bandwidth: float = 800e6

    def __post_init__(self):
        if not (self.frequency > 0 and self.bandwidth > 0):
            raise ValueError("frequency and bandwidth must be positive")
        for a, b in (("tx", "rx"), ("tx", "ris"), ("ris", "rx")):
            if self.distance(a, b) <= 0:
                raise ValueError(f"{a} and {b} are co-located")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    def distance(self, a: str, b: str) -> float:
        pa, pb = getattr(self, a), getattr(self, b)
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform planar array with `count` elements and `spacing` metres.

    The array is square unless `rows` (elements along the vertical ``q``
    axis) is given, in which case it is ``count // rows`` wide.
    """

    count: int
    spacing: float
    rows: Optional[int] = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"element count must be positive, got {self.count}")
        if self.rows is None:
            side = math.isqrt(self.count)
            if side * side != self.count:
                raise ValueError(f"square array needs a perfect-square count, got {self.count}")
        elif self.rows < 1 or self.count % self.rows:
            raise ValueError(f"rows={self.rows} does not divide count={self.count}")
        if not self.spacing > 0:
            raise ValueError("element spacing must be positive")

    @property
    def shape(self) -> Tuple[int, int]:
        """``(n_p, n_q)``: horizontal and vertical element counts."""
        if self.rows is None:
            side = math.isqrt(self.count)
            return side, side
        return self.count // self.rows, self.rows

    @property
    def side(self) -> int:
        return self.shape[0]


@dataclass(frozen=True)
class ChannelModelParams:
    k_rice: float = 10.0
    n_ray: int = 10
    gamma_los: float = 1.90
    gamma_nlos: float = 4.39
    g_tx: float = 1.0
    g_rx: float = 1.0
    a_ris: Optional[float] = None  # None -> (lambda/2)^2
    k_abs: float = 0.0
    direct_has_los: bool = False

    def __post_init__(self):
        if not self.k_rice > 0:
            raise ValueError("k_rice must be positive")
        if self.n_ray < 1:
            raise ValueError("n_ray must be >= 1")
        if not (self.gamma_los > 0 and self.gamma_nlos > 0):
            raise ValueError("path loss exponents must be positive")
        if not (self.g_tx > 0 and self.g_rx > 0):
            raise ValueError("antenna gains must be positive")
        if self.a_ris is not None and not self.a_ris > 0:
            raise ValueError("a_ris must be positive")
        if self.k_abs < 0:
            raise ValueError("k_abs must be non-negative")

    def ris_area(self, wavelength: float) -> float:
        return self.a_ris if self.a_ris is not None else (wavelength / 2.0) ** 2


@dataclass(frozen=True)
class Scenario:
    """Everything needed to draw one channel realization."""

    geometry: ScenarioGeometry
    tx_array: ArrayConfig
    rx_array: ArrayConfig
    ris_array: ArrayConfig
    params: ChannelModelParams = field(default_factory=ChannelModelParams)


@dataclass(frozen=True)
class ChannelSet:
    """Direct, tx->RIS and RIS->rx matrices of one realization.

    ``H_sd`` is ``N_rx x N_tx``, ``H_sr`` is ``N_ris x N_tx`` and ``H_rd`` is
    ``N_rx x N_ris``. ``N_ris = 0`` is allowed and means "no RIS".
    """

    H_sd: np.ndarray
    H_sr: np.ndarray
    H_rd: np.ndarray
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        H_sd = as_cmatrix(self.H_sd)
        H_sr = as_cmatrix(self.H_sr, allow_empty=True)
        H_rd = as_cmatrix(self.H_rd, allow_empty=True)
        n_rx, n_tx = H_sd.shape
        if H_sr.shape[1] != n_tx or H_rd.shape[0] != n_rx or H_rd.shape[1] != H_sr.shape[0]:
            raise DimensionMismatch(
                f"inconsistent shapes H_sd={H_sd.shape} H_sr={H_sr.shape} H_rd={H_rd.shape}"
            )
        object.__setattr__(self, "H_sd", H_sd)
        object.__setattr__(self, "H_sr", H_sr)
        object.__setattr__(self, "H_rd", H_rd)

    @property
    def n_tx(self) -> int:
        return self.H_sd.shape[1]

    @property
    def n_rx(self) -> int:
        return self.H_sd.shape[0]

    @property
    def n_ris(self) -> int:
        return self.H_sr.shape[0]

    def digest(self) -> str:
        """Short content hash used to prove that paired trials share a channel."""
        h = hashlib.sha256()
        for m in (self.H_sd, self.H_sr, self.H_rd):
            h.update(struct.pack("<II", *m.shape))
            h.update(np.ascontiguousarray(m, dtype="<c16").tobytes())
        return h.hexdigest()[:16]


def steering_vector(cfg: ArrayConfig, azimuth: float, elevation: float, wavelength: float) -> np.ndarray:
    """UPA response; entry ``p + q * n_p`` is the (p, q) grid element (p fastest)."""
    return steering_matrix(cfg, np.atleast_1d(azimuth), np.atleast_1d(elevation), wavelength)[:, 0]


def steering_matrix(cfg: ArrayConfig, azimuth, elevation, wavelength: float) -> np.ndarray:
    """Column ``l`` is the steering vector for ``(azimuth[l], elevation[l])``."""
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    kd = 2.0 * np.pi / wavelength * cfg.spacing
    n_p, n_q = cfg.shape
    p_idx = np.arange(n_p, dtype=float)
    q_idx = np.arange(n_q, dtype=float)
    u = np.sin(az) * np.sin(el)
    v = np.cos(el)
    # grid[q, p, l] = p*u_l + q*v_l ; reshape with p fastest
    grid = p_idx[None, :, None] * u[None, None, :] + q_idx[:, None, None] * v[None, None, :]
    return np.exp(1j * kd * grid.reshape(cfg.count, -1))


def path_loss(distance: float, gamma: float, gain: float, area: float, k_abs: float = 0.0) -> float:
    """Large-scale power gain ``gain * area / (4 pi d^gamma) * exp(-k_abs d)``."""
    if not distance > 0:
        raise ValueError("distance must be positive")
    return gain * area / (4.0 * math.pi * distance**gamma) * math.exp(-k_abs * distance)


def _draw_angles(gen: np.random.Generator, n: int):
    az = gen.uniform(-np.pi, np.pi, n)
    el = gen.uniform(-np.pi / 2, np.pi / 2, n)
    return az, el


def synthesize_link(
    rng,
    tx_cfg: ArrayConfig,
    rx_cfg: ArrayConfig,
    *,
    distance: float,
    wavelength: float,
    gain_area: float,
    params: ChannelModelParams,
    has_los: bool,
) -> np.ndarray:
    """One LOS ray (optional) plus ``n_ray`` scattered rays between two UPAs.

    `gain_area` is the numerator ``G * A`` of the path-loss expression. Draw
    order from `rng` is fixed: LOS angles, NLOS angles, NLOS gains.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    beta_nlos = path_loss(distance, params.gamma_nlos, gain_area, 1.0, params.k_abs)
    H = np.zeros((rx_cfg.count, tx_cfg.count), dtype=np.complex128)
    if has_los:
        beta_los = path_loss(distance, params.gamma_los, gain_area, 1.0, params.k_abs)
        az_t, el_t = _draw_angles(gen, 1)
        az_r, el_r = _draw_angles(gen, 1)
        a_t = steering_matrix(tx_cfg, az_t, el_t, wavelength)[:, 0]
        a_r = steering_matrix(rx_cfg, az_r, el_r, wavelength)[:, 0]
        phase = np.exp(-2j * np.pi * distance / wavelength)
        H += np.sqrt(beta_los) * phase * np.outer(a_r, a_t.conj())
    n = params.n_ray
    az_t, el_t = _draw_angles(gen, n)
    az_r, el_r = _draw_angles(gen, n)
    alpha = sample_cgaussian(gen, n, 1, 1.0 / n)[:, 0]
    A_t = steering_matrix(tx_cfg, az_t, el_t, wavelength)
    A_r = steering_matrix(rx_cfg, az_r, el_r, wavelength)
    H += np.sqrt(beta_nlos / params.k_rice) * (A_r * alpha) @ A_t.conj().T
    return H


def effective_channel(ch: ChannelSet, phi) -> np.ndarray:
    """``H_sd + H_rd diag(phi) H_sr``."""
    phi = np.asarray(phi, dtype=np.complex128).reshape(-1)
    if phi.shape[0] != ch.n_ris:
        raise DimensionMismatch(f"phi has {phi.shape[0]} entries, RIS has {ch.n_ris}")
    return ch.H_sd + (ch.H_rd * phi) @ ch.H_sr


def generate_channel_set(rng: RngStream, scenario: Scenario) -> ChannelSet:
    """Draw ``H_sd`` (NLOS only), then ``H_sr`` and ``H_rd`` (LOS + NLOS).

    ``H_sd`` is drawn first so that, for a fixed stream, the direct link does
    not change when only the RIS size changes.
    """
    geo, p = scenario.geometry, scenario.params
    lam = geo.wavelength
    area = p.ris_area(lam)
    gen = rng.generator()
    common = dict(wavelength=lam, params=p)
    H_sd = synthesize_link(
        gen, scenario.tx_array, scenario.rx_array,
        distance=geo.distance("tx", "rx"),
        gain_area=p.g_tx * p.g_rx * lam**2 / (4.0 * math.pi),
        has_los=p.direct_has_los, **common,
    )
    H_sr = synthesize_link(
        gen, scenario.tx_array, scenario.ris_array,
        distance=geo.distance("tx", "ris"), gain_area=p.g_tx * area, has_los=True, **common,
    )
    H_rd = synthesize_link(
        gen, scenario.ris_array, scenario.rx_array,
        distance=geo.distance("ris", "rx"), gain_area=p.g_rx * area, has_los=True, **common,
    )
    return ChannelSet(H_sd, H_sr, H_rd, seed=rng.seed, stream=rng.stream)


# ----------------------------------------------------------------------------
# binary freeze format
# ----------------------------------------------------------------------------
# file   := MAGIC u32:version u32:count record*
# record := f64:sweep_value u32:trial u64:seed u64:stream matrix{3}
# matrix := u32:rows u32:cols (rows*cols complex128, row-major, re/im interleaved)
# all little-endian

_MAGIC = b"RISCHAN\x00"
_VERSION = 1


def write_channel_sets(path, items: Iterable[Tuple[float, int, ChannelSet]]) -> int:
    """Write ``(sweep_value, trial, ChannelSet)`` items; returns the count."""
    items = list(items)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(items)))
        for value, trial, ch in items:
            fh.write(struct.pack("<dIQQ", float(value), int(trial), int(ch.seed), int(ch.stream)))
            for m in (ch.H_sd, ch.H_sr, ch.H_rd):
                fh.write(struct.pack("<II", *m.shape))
                fh.write(np.ascontiguousarray(m, dtype="<c16").tobytes())
    return len(items)


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ValueError("truncated channel file")
    return buf


def read_channel_sets(path) -> Iterator[Tuple[float, int, ChannelSet]]:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path} is not a channel file")
        version, count = struct.unpack("<II", _read_exact(fh, 8))
        if version != _VERSION:
            raise ValueError(f"unsupported channel file version {version}")
        for _ in range(count):
            value, trial, seed, stream = struct.unpack("<dIQQ", _read_exact(fh, 28))
            mats = []
            for _ in range(3):
                rows, cols = struct.unpack("<II", _read_exact(fh, 8))
                raw = _read_exact(fh, rows * cols * 16)
                mats.append(np.frombuffer(raw, dtype="<c16").reshape(rows, cols))
            yield value, trial, ChannelSet(*mats, seed=seed, stream=stream)


def rayleigh_channel_set(rng: RngStream, n_tx: int, n_rx: int, n_ris: int,
                         direct_gain: float = 1.0, cascade_gain: float = 1.0) -> ChannelSet:
    """i.i.d. Rayleigh links for array sizes that are not square UPAs.

    ``H_sd`` entries have variance `direct_gain`; ``H_sr`` and ``H_rd`` have
    variance ``sqrt(cascade_gain)`` each.
    """
    gen = rng.generator()
    v = math.sqrt(cascade_gain)
    H_sd = sample_cgaussian(gen, n_rx, n_tx, direct_gain)
    H_sr = sample_cgaussian(gen, n_ris, n_tx, v) if n_ris else np.zeros((0, n_tx))
    H_rd = sample_cgaussian(gen, n_rx, n_ris, v) if n_ris else np.zeros((n_rx, 0))
    return ChannelSet(H_sd, H_sr, H_rd, seed=rng.seed, stream=rng.stream)
