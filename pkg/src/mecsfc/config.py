"""Run configuration: one dataclass per section plus INI-style load/dump.

The file format is plain ``key = value`` lines grouped under the sections
``topology``, ``workload``, ``device``, ``channel``, ``cost``, ``td3``,
``ddqn`` and ``run``. Ranges are written as ``min, max``.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigurationError

SCHEMES = ("cdadrl", "td3-ddqn", "ddpg-duel", "ddpg-ddqn", "local", "edge", "binary", "random")
LEARNED_SCHEMES = SCHEMES[:4]
BASELINE_SCHEMES = SCHEMES[4:]


def _check_range(name, rng, lower=None, strict_lower=False):
    lo, hi = rng
    if lo > hi:
        raise ConfigurationError(f"{name}: min {lo} exceeds max {hi}")
    if lower is not None:
        if strict_lower and lo <= lower:
            raise ConfigurationError(f"{name}: values must be > {lower}, got {lo}")
        if not strict_lower and lo < lower:
            raise ConfigurationError(f"{name}: values must be >= {lower}, got {lo}")


@dataclass
class TopologyConfig:
    n_stations: int = 10
    compute_ghz: tuple[float, float] = (2.0, 6.0)
    bandwidth_mbps: tuple[float, float] = (20.0, 100.0)
    distance_m: tuple[float, float] = (100.0, 800.0)
    bs_tx_power_w: tuple[float, float] = (1.0, 2.0)
    edge_probability: float = 0.4
    routing: str = "hops"  # or "inverse_bandwidth"
    max_attempts: int = 1000

    def validate(self):
        if self.n_stations < 1:
            raise ConfigurationError("n_stations must be >= 1")
        _check_range("compute_ghz", self.compute_ghz, 0.0)
        _check_range("bandwidth_mbps", self.bandwidth_mbps, 0.0)
        _check_range("distance_m", self.distance_m, 0.0, strict_lower=True)
        _check_range("bs_tx_power_w", self.bs_tx_power_w, 0.0, strict_lower=True)
        if not 0.0 <= self.edge_probability <= 1.0:
            raise ConfigurationError("edge_probability must lie in [0, 1]")
        if self.n_stations > 1 and self.edge_probability == 0.0:
            raise ConfigurationError("edge_probability 0 cannot yield a connected graph")
        if self.routing not in ("hops", "inverse_bandwidth"):
            raise ConfigurationError(f"unknown routing weight {self.routing!r}")


@dataclass
class WorkloadConfig:
    data_kbits: tuple[float, float] = (800.0, 1000.0)
    cycles_per_bit: tuple[float, float] = (800.0, 1000.0)
    n_vnfs: tuple[int, int] = (3, 5)
    vnf_compute_ghz: tuple[float, float] = (0.1, 0.5)
    inter_vnf_mbps: tuple[float, float] = (5.0, 10.0)
    output_ratio: tuple[float, float] = (0.5, 1.5)
    deadline_s: tuple[float, float] = (20.0, 35.0)
    instantiation_delay_s: tuple[float, float] = (0.05, 0.15)

    def validate(self):
        _check_range("data_kbits", self.data_kbits, 0.0, strict_lower=True)
        _check_range("cycles_per_bit", self.cycles_per_bit, 0.0, strict_lower=True)
        _check_range("n_vnfs", self.n_vnfs, 1)
        _check_range("vnf_compute_ghz", self.vnf_compute_ghz, 0.0, strict_lower=True)
        _check_range("inter_vnf_mbps", self.inter_vnf_mbps, 0.0, strict_lower=True)
        _check_range("output_ratio", self.output_ratio, 0.0, strict_lower=True)
        _check_range("deadline_s", self.deadline_s, 0.0, strict_lower=True)
        _check_range("instantiation_delay_s", self.instantiation_delay_s, 0.0)

    @property
    def max_vnfs(self):
        return int(self.n_vnfs[1])


@dataclass
class DeviceConfig:
    compute_ghz: float = 0.6
    kappa: float = 1e-26
    # normaliser for the cp_MD state feature; top of the sweep grid
    max_compute_ghz: float = 1.6

    def validate(self):
        if self.compute_ghz <= 0 or self.kappa <= 0 or self.max_compute_ghz <= 0:
            raise ConfigurationError("device parameters must be positive")


@dataclass
class ChannelConfig:
    bandwidth_hz: float = 20e6
    noise_power_w: float = 1e-6
    md_tx_power_w: float = 0.5
    md_rx_power_w: float = 0.1
    gain_reference: float = 1e-3
    pathloss_exponent: float = 3.0
    reference_distance_m: float = 100.0

    def validate(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigurationError(f"channel.{f.name} must be positive")


@dataclass
class CostConfig:
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    placement_weights: tuple[float, float] = (0.5, 0.5)
    price_alpha: float = 1.0
    price_beta: float = 0.1
    md_penalty: float = 100.0
    stage_penalties: tuple[float, float, float] = (100.0, 100.0, 100.0)  # mu_5, mu_6, mu_7
    normalize: bool = False
    delay_bounds: tuple[float, float] = (0.0, 35.0)
    energy_bounds: tuple[float, float] = (0.0, 10.0)
    charge_bounds: tuple[float, float] = (0.0, 1.0)
    boundary_epsilon: float = 0.0

    def validate(self):
        for name in ("weights", "placement_weights"):
            w = getattr(self, name)
            if any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-9:
                raise ConfigurationError(f"{name} must be non-negative and sum to 1, got {w}")
        for name in ("delay_bounds", "energy_bounds", "charge_bounds"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ConfigurationError(f"{name} needs max > min")
        if not 0.0 <= self.boundary_epsilon < 0.5:
            raise ConfigurationError("boundary_epsilon must lie in [0, 0.5)")


@dataclass
class Td3Config:
    lr: float = 1e-3
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    sigma: float = 0.1
    target_sigma: float = 0.2
    noise_clip: float = 0.5
    batch_size: int = 128
    buffer_size: int = 2000
    hidden: int = 64
    depth: int = 4

    def validate(self):
        if self.policy_delay < 1 or self.batch_size < 1 or self.buffer_size < self.batch_size:
            raise ConfigurationError("td3: need policy_delay >= 1 and buffer_size >= batch_size >= 1")
        if not 0.0 <= self.tau <= 1.0 or not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError("td3: tau and gamma must lie in [0, 1]")


@dataclass
class DdqnConfig:
    lr: float = 1e-3
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_min: float = 0.01
    eps_decay: float = 0.9995
    sync_period: int = 100
    batch_size: int = 128
    buffer_size: int = 2000
    hidden: int = 64
    depth: int = 4

    def validate(self):
        if not 0.0 <= self.eps_min <= self.eps_start <= 1.0:
            raise ConfigurationError("ddqn: need 0 <= eps_min <= eps_start <= 1")
        if self.sync_period < 1 or self.batch_size < 1 or self.buffer_size < self.batch_size:
            raise ConfigurationError("ddqn: bad sync_period/batch_size/buffer_size")


@dataclass
class RunConfig:
    scheme: str = "cdadrl"
    episodes: int = 3000
    slots: int = 20
    seed: int = 0
    eval_episodes: int = 10
    checkpoint_every: int = 0
    cp_md_sweep: tuple[float, ...] = (0.6, 0.8, 1.0, 1.2, 1.4, 1.6)
    seeds: tuple[int, ...] = tuple(range(10))
    schemes: tuple[str, ...] = ("cdadrl", "local", "edge", "binary", "random")
    workers: int = 1

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigurationError(f"unknown scheme {s!r} in run.schemes")
        if self.episodes < 1 or self.slots < 1:
            raise ConfigurationError("episodes and slots must be >= 1")
        if self.eval_episodes < 0:
            raise ConfigurationError("eval_episodes must be >= 0")


@dataclass
class ExperimentConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    device: DeviceConfig = field(default_factory=DeviceConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    cost: CostConfig = field(default_factory=CostConfig)
    td3: Td3Config = field(default_factory=Td3Config)
    ddqn: DdqnConfig = field(default_factory=DdqnConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self):
        for f in dataclasses.fields(self):
            getattr(self, f.name).validate()
        return self

    def replace(self, **sections):
        """Copy with whole sections or dotted keys (``"run.seed"``) overridden."""
        cfg = dataclasses.replace(self, **{k: v for k, v in sections.items() if "." not in k})
        for key, value in sections.items():
            if "." in key:
                sec, name = key.split(".", 1)
                setattr(cfg, sec, dataclasses.replace(getattr(cfg, sec), **{name: value}))
        return cfg


SECTIONS = [f.name for f in dataclasses.fields(ExperimentConfig)]


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _parse(raw: str, default: Any, key: str):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, tuple):
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            proto = default[0] if default else 0.0
            return tuple(_parse(p, proto, key) for p in parts)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"cannot parse {key} = {raw!r}") from None


def dumps(cfg: ExperimentConfig) -> str:
    lines = []
    for sec in SECTIONS:
        lines.append(f"[{sec}]")
        block = getattr(cfg, sec)
        for f in dataclasses.fields(block):
            lines.append(f"{f.name} = {_format(getattr(block, f.name))}")
        lines.append("")
    return "\n".join(lines)


def loads(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(str(exc)) from None
    cfg = base if base is not None else ExperimentConfig()
    for sec in parser.sections():
        if sec not in SECTIONS:
            raise ConfigurationError(f"unknown config section [{sec}]")
        block = getattr(cfg, sec)
        known = {f.name: f for f in dataclasses.fields(block)}
        updates = {}
        for key, raw in parser.items(sec):
            if key not in known:
                raise ConfigurationError(f"unknown key {sec}.{key}")
            updates[key] = _parse(raw, getattr(block, key), f"{sec}.{key}")
        cfg = dataclasses.replace(cfg, **{sec: dataclasses.replace(block, **updates)})
    return cfg.validate()


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dump(cfg: ExperimentConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(cfg))
