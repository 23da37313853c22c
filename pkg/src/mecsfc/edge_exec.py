"""Remote execution: transmission, processing, MD radio energy and usage charge."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .local_exec import MobileDevice
from .topology import EdgeInfrastructure, RoutePath, ResourceDemand, shortest_path
from .workload import GHZ, MBPS, Task


@dataclass(frozen=True)
class PlacementRecord:
    host_per_vnf: tuple[int, ...]
    access_station: int
    # v_MD -> host(f_1), host(f_i) -> host(f_i+1) ..., host(f_N) -> v_MD
    segment_paths: tuple[RoutePath, ...]

    @property
    def first_segment(self):
        return self.segment_paths[0]

    @property
    def last_segment(self):
        return self.segment_paths[-1]

    @property
    def inter_segments(self):
        return self.segment_paths[1:-1]

    def demands(self, task: Task) -> ResourceDemand:
        chain = task.chain
        return ResourceDemand(
            compute=[(h, f.compute_demand) for h, f in zip(self.host_per_vnf, chain.vnfs)],
            bandwidth=list(zip(self.inter_segments, chain.inter_vnf_bandwidth)),
        )


def make_placement(infra: EdgeInfrastructure, hosts, access_station=None) -> PlacementRecord:
    hosts = tuple(int(h) for h in hosts)
    v_md = infra.access_station if access_station is None else access_station
    chain = (v_md,) + hosts + (v_md,)
    paths = tuple(shortest_path(infra, a, b) for a, b in zip(chain[:-1], chain[1:]))
    return PlacementRecord(hosts, v_md, paths)


@dataclass(frozen=True)
class EdgeOutcome:
    transmission_delay: float
    processing_delay: float
    instantiation_delay: float
    edge_delay: float
    uplink_energy: float
    downlink_energy: float
    edge_energy: float
    usage_charge: float


ZERO_OUTCOME = EdgeOutcome(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def transmission_delay(task: Task, x: float, placement: PlacementRecord,
                       uplink_rate: float, downlink_rate: float, infra: EdgeInfrastructure) -> float:
    # wired terms use bw_e^t, i.e. the ledger as it stood when the slot began
    slot_bw = infra.slot_snapshot()[1]
    data = x * task.input_bits
    xi_last = task.chain.vnfs[-1].output_ratio
    up = data / uplink_rate
    first = sum(data / (slot_bw[lid] * MBPS) for lid in placement.first_segment.link_sequence)
    inter = sum(f.output_ratio * data / (br * MBPS)
                for f, br in zip(task.chain.vnfs[:-1], task.chain.inter_vnf_bandwidth))
    last = sum(xi_last * data / (slot_bw[lid] * MBPS) for lid in placement.last_segment.link_sequence)
    down = xi_last * data / downlink_rate
    return up + first + inter + last + down


def edge_processing_delay(task: Task, x: float) -> float:
    work = x * task.input_bits * task.cycles_per_bit
    xi_prev, total = 1.0, 0.0
    for f in task.chain.vnfs:
        total += xi_prev * work / (f.compute_demand * GHZ)
        xi_prev = f.output_ratio
    return total


def chain_instantiation_delay(task: Task) -> float:
    return max(f.instantiation_delay for f in task.chain.vnfs)


def edge_delay(instantiation: float, dt: float, dp: float) -> float:
    return instantiation + dt + dp


def edge_energy_terms(task: Task, x: float, uplink_rate: float, downlink_rate: float,
                      md: MobileDevice) -> tuple[float, float]:
    data = x * task.input_bits
    eu = data / uplink_rate * md.tx_power
    ed = task.chain.vnfs[-1].output_ratio * data / downlink_rate * md.rx_power
    return eu, ed


def edge_energy(task, x, uplink_rate, downlink_rate, md) -> float:
    eu, ed = edge_energy_terms(task, x, uplink_rate, downlink_rate, md)
    return eu + ed


def unit_price(compute_demand: float, alpha: float, beta: float) -> float:
    """Price per second of hosting a VNF; ``compute_demand`` in GHz."""
    return math.exp(-alpha) * math.expm1(compute_demand) * beta


def usage_charge(task: Task, x: float, alpha: float, beta: float) -> float:
    work = x * task.input_bits * task.cycles_per_bit
    xi_prev, total = 1.0, 0.0
    for f in task.chain.vnfs:
        total += xi_prev * work / (f.compute_demand * GHZ) * unit_price(f.compute_demand, alpha, beta)
        xi_prev = f.output_ratio
    return total


def evaluate_edge(task, x, placement, uplink_rate, downlink_rate, infra, md, alpha, beta) -> EdgeOutcome:
    if x <= 0.0:
        return ZERO_OUTCOME
    dt = transmission_delay(task, x, placement, uplink_rate, downlink_rate, infra)
    dp = edge_processing_delay(task, x)
    di = chain_instantiation_delay(task)
    eu, ed = edge_energy_terms(task, x, uplink_rate, downlink_rate, md)
    return EdgeOutcome(dt, dp, di, edge_delay(di, dt, dp), eu, ed, eu + ed,
                       usage_charge(task, x, alpha, beta))
