"""System parameters and run settings, loadable from YAML."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelStats, FadingParams, path_gain
from .frames import ScheduleError, parse_scheme
from .phylink import PowerConfig


class ConfigError(ValueError):
    pass


DEFAULT_VELOCITIES = tuple(range(20, 301, 20))
DEFAULT_SCHEMES = ("TDD-1", "MDD-1(7)", "MDD-2", "TDD-2")


@dataclass(frozen=True)
class SystemConfig:
    """Physical-layer parameters; defaults follow the reference setup."""

    n_antennas: int = 32
    n_users: int = 8
    n_subcarriers: int = 96
    n_dl: int = 64
    n_ul: int = 32
    p_dl_dbm: float = 30.0
    p_ul_dbm: float = 20.0
    noise_dbm: float = -94.0
    n_taps: int = 4
    carrier_frequency: float = 5e9
    subcarrier_spacing: float = 15e3
    symbol_duration: float = 66.67e-6
    frame_length: int = 28
    switching_fraction: float = 0.5
    modulation: str = "16QAM"
    sic_bs_db: float = 130.0
    sic_mt_db: float = 120.0
    ibfd_sic_penalty_db: float = 0.0
    distance_min: float = 50.0
    distance_max: float = 100.0
    path_loss_exponent: float = 3.8
    distances: tuple | None = None
    n_pilots: int = 7
    n_ul_data: int = 7
    kappa: int = 1

    def problems(self) -> list:
        out = []
        for name in ("n_antennas", "n_users", "n_subcarriers", "n_taps", "frame_length",
                     "n_pilots"):
            if getattr(self, name) < 1:
                out.append(f"{name}: must be at least 1")
        if self.n_dl < 0 or self.n_ul < 1:
            out.append("n_dl/n_ul: need n_dl >= 0 and n_ul >= 1")
        if self.n_dl + self.n_ul != self.n_subcarriers:
            out.append(f"n_dl + n_ul: {self.n_dl} + {self.n_ul} != n_subcarriers "
                       f"({self.n_subcarriers})")
        elif self.n_subcarriers % self.n_ul:
            out.append("n_ul: must divide n_subcarriers for evenly spaced pilots")
        if self.n_ul < self.n_users * self.n_taps:
            out.append("n_ul: fewer UL subcarriers than users x taps")
        if self.n_antennas < self.n_users:
            out.append("n_antennas: ZF needs at least as many antennas as users")
        for name in ("carrier_frequency", "subcarrier_spacing", "symbol_duration"):
            if getattr(self, name) <= 0:
                out.append(f"{name}: must be positive")
        if self.switching_fraction != 0.5:
            out.append("switching_fraction: only half-symbol switching is modelled")
        if self.modulation.upper() != "16QAM":
            out.append("modulation: only 16QAM is supported")
        for name in ("sic_bs_db", "sic_mt_db", "ibfd_sic_penalty_db"):
            if getattr(self, name) < 0:
                out.append(f"{name}: must be non-negative")
        if not 0 < self.distance_min <= self.distance_max:
            out.append("distance_min/distance_max: need 0 < min <= max")
        if self.distances is not None:
            if len(self.distances) != self.n_users or min(self.distances) <= 0:
                out.append("distances: need one positive distance per user")
        if not 1 <= self.kappa <= self.n_pilots:
            out.append("kappa: must lie in 1..n_pilots")
        return out

    def validate(self) -> "SystemConfig":
        p = self.problems()
        if p:
            raise ConfigError("; ".join(p))
        return self

    def fading(self, velocity_kmh: float) -> FadingParams:
        return FadingParams.from_kmh(velocity_kmh, self.carrier_frequency,
                                     self.symbol_duration)

    def draw_betas(self, rng: np.random.Generator) -> np.ndarray:
        if self.distances is not None:
            d = np.asarray(self.distances, dtype=float)
        else:
            d = rng.uniform(self.distance_min, self.distance_max, self.n_users)
        return path_gain(d, self.path_loss_exponent)

    def stats(self, betas) -> ChannelStats:
        return ChannelStats(betas, self.n_taps, self.n_subcarriers)

    def powers(self) -> PowerConfig:
        return PowerConfig.from_budget(self.p_dl_dbm, self.p_ul_dbm, self.noise_dbm,
                                       self.sic_bs_db, self.sic_mt_db, self.n_dl, self.n_ul)


@dataclass(frozen=True)
class RunSpec:
    seed: int = 0
    trials: int = 1000
    schemes: tuple = DEFAULT_SCHEMES
    velocities: tuple = DEFAULT_VELOCITIES
    out_dir: str = "results"
    emit_plots: bool = False
    workers: int = 1
    chunk: int = 50

    def problems(self) -> list:
        out = []
        if self.trials < 1:
            out.append("trials: must be at least 1")
        if not self.velocities or any(v <= 0 for v in self.velocities):
            out.append("velocities: need at least one, all positive")
        if not 0 <= self.seed < 2 ** 64:
            out.append("seed: must be an unsigned 64-bit integer")
        if self.workers < 1 or self.chunk < 1:
            out.append("workers/chunk: must be at least 1")
        if not self.schemes:
            out.append("schemes: need at least one")
        for s in self.schemes:
            try:
                parse_scheme(s)
            except ScheduleError as exc:
                out.append(f"schemes: {exc}")
        return out

    def validate(self) -> "RunSpec":
        p = self.problems()
        if p:
            raise ConfigError("; ".join(p))
        return self


def _build(cls, data: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{section}: unknown field(s) {', '.join(unknown)}")
    kwargs = {}
    for k, v in data.items():
        if isinstance(v, list):
            v = tuple(v)
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def parse_config(data) -> tuple:
    """Build ``(SystemConfig, RunSpec)`` from a mapping with optional
    ``system`` and ``run`` sections."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    extra = sorted(set(data) - {"system", "run"})
    if extra:
        raise ConfigError(f"unknown section(s) {', '.join(extra)}")
    system = _build(SystemConfig, data.get("system") or {}, "system").validate()
    run = _build(RunSpec, data.get("run") or {}, "run").validate()
    return system, run


def load_config(path=None) -> tuple:
    """Read a YAML file; missing or empty files give the defaults."""
    if path is None:
        return parse_config({})
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    return parse_config(data)


def config_to_dict(system: SystemConfig, run: RunSpec | None = None) -> dict:
    out = {"system": {k: list(v) if isinstance(v, tuple) else v
                      for k, v in dataclasses.asdict(system).items()}}
    if run is not None:
        out["run"] = {k: list(v) if isinstance(v, tuple) else v
                      for k, v in dataclasses.asdict(run).items()}
    return out


__all__ = ["ConfigError", "SystemConfig", "RunSpec", "load_config", "parse_config",
           "config_to_dict", "DEFAULT_VELOCITIES", "DEFAULT_SCHEMES"]
