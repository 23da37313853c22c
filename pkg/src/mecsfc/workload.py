"""Per-slot task / SFC generation and the wireless channel model.

Units inside the physics code: bits, cycles/bit, cycles/s (GHz * 1e9) and
bits/s (Mbps * 1e6). Specs keep the human units (Kb, GHz, Mbps).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ChannelConfig, WorkloadConfig
from .errors import ConstraintViolation

KBIT = 1e3
GHZ = 1e9
MBPS = 1e6


@dataclass(frozen=True)
class VnfSpec:
    index_in_chain: int  # 1-based
    compute_demand: float  # GHz
    instantiation_delay: float  # s
    output_ratio: float  # xi_i = h_i / d


@dataclass(frozen=True)
class ServiceChain:
    vnfs: tuple[VnfSpec, ...]
    inter_vnf_bandwidth: tuple[float, ...]  # Mbps, length N-1

    def __post_init__(self):
        if len(self.inter_vnf_bandwidth) != max(len(self.vnfs) - 1, 0):
            raise ValueError("inter_vnf_bandwidth must have N-1 entries")

    @property
    def n(self):
        return len(self.vnfs)

    def compute_demands(self):
        return np.array([f.compute_demand for f in self.vnfs])

    def input_ratios(self):
        """xi_{i-1} for i = 1..N, with xi_0 = 1."""
        return np.array([1.0] + [f.output_ratio for f in self.vnfs[:-1]])

    def instantiation_delays(self):
        return np.array([f.instantiation_delay for f in self.vnfs])


@dataclass(frozen=True)
class Task:
    chain: ServiceChain
    input_bits: float
    cycles_per_bit: float
    deadline: float
    slot: int = 0


@dataclass(frozen=True)
class Channel:
    bandwidth_hz: float
    noise_power: float
    md_tx_power: float
    md_rx_power: float
    gain_reference: float
    pathloss_exponent: float
    reference_distance: float = 100.0

    @classmethod
    def from_config(cls, cfg: ChannelConfig):
        cfg.validate()
        return cls(cfg.bandwidth_hz, cfg.noise_power_w, cfg.md_tx_power_w, cfg.md_rx_power_w,
                   cfg.gain_reference, cfg.pathloss_exponent, cfg.reference_distance_m)


def _draw(rng, lo_hi):
    lo, hi = lo_hi
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def generate_task(config: WorkloadConfig, slot: int, rng: np.random.Generator) -> Task:
    lo_n, hi_n = config.n_vnfs
    n = int(lo_n) if lo_n == hi_n else int(rng.integers(lo_n, hi_n + 1))
    vnfs = tuple(
        VnfSpec(i + 1,
                _draw(rng, config.vnf_compute_ghz),
                _draw(rng, config.instantiation_delay_s),
                _draw(rng, config.output_ratio))
        for i in range(n)
    )
    br = tuple(_draw(rng, config.inter_vnf_mbps) for _ in range(n - 1))
    return Task(
        chain=ServiceChain(vnfs, br),
        input_bits=_draw(rng, config.data_kbits) * KBIT,
        cycles_per_bit=_draw(rng, config.cycles_per_bit),
        deadline=_draw(rng, config.deadline_s),
        slot=slot,
    )


def channel_gain(distance_m: float, ch: Channel) -> float:
    if not distance_m > 0:
        raise ConstraintViolation("domain", f"distance must be positive, got {distance_m}")
    return ch.gain_reference * (distance_m / ch.reference_distance) ** (-ch.pathloss_exponent)


def link_rate(tx_power: float, gain: float, ch: Channel) -> float:
    """Shannon rate W*log2(1 + p*g/noise) in bits/s."""
    return ch.bandwidth_hz * math.log2(1.0 + tx_power * gain / ch.noise_power)


def radio_rates(infra, ch: Channel) -> tuple[float, float]:
    """(uplink, downlink) rates between the MD and its access station.

    Both directions share the same distance-based gain.
    """
    bs = infra.stations[infra.access_station]
    g = channel_gain(bs.distance_to_md, ch)
    return link_rate(ch.md_tx_power, g, ch), link_rate(bs.tx_power, g, ch)
