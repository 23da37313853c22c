"""On-device execution: SFC grouping, local delay and local energy."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConstraintViolation
from .workload import GHZ, ServiceChain, Task


@dataclass(frozen=True)
class MobileDevice:
    compute_capacity: float  # GHz
    tx_power: float = 0.5
    rx_power: float = 0.1
    capacitance_coefficient: float = 1e-26

    def __post_init__(self):
        if self.compute_capacity <= 0 or self.capacitance_coefficient <= 0:
            raise ValueError("compute_capacity and kappa must be positive")


@dataclass(frozen=True)
class GroupPartition:
    groups: tuple[tuple[int, ...], ...]  # 1-based VNF indices

    @property
    def group_count(self):
        return len(self.groups)


_REL_TOL = 1e-12


def _check_x(x):
    if not 0.0 <= x <= 1.0:
        raise ConstraintViolation("C1", f"offloading ratio {x} outside [0, 1]")


def partition_into_groups(chain: ServiceChain, md: MobileDevice) -> GroupPartition:
    """Greedy in-order packing of the chain under the MD compute budget."""
    groups, current, load = [], [], 0.0
    budget = md.compute_capacity * (1.0 + _REL_TOL)  # so 0.1+0.2+0.3 still fits 0.6
    for f in chain.vnfs:
        if f.compute_demand > md.compute_capacity:
            raise ConstraintViolation(
                "C4", f"VNF {f.index_in_chain} needs {f.compute_demand:g} GHz > cp_MD {md.compute_capacity:g}")
        if current and load + f.compute_demand > budget:
            groups.append(tuple(current))
            current, load = [], 0.0
        current.append(f.index_in_chain)
        load += f.compute_demand
    if current:
        groups.append(tuple(current))
    return GroupPartition(tuple(groups))


def singleton_partition(chain: ServiceChain) -> GroupPartition:
    return GroupPartition(tuple((f.index_in_chain,) for f in chain.vnfs))


def local_delay(task: Task, x: float, partition: GroupPartition) -> float:
    _check_x(x)
    if x == 1.0:
        return 0.0
    vnfs = task.chain.vnfs
    chi = (1.0 - x) * task.input_bits * task.cycles_per_bit
    total = 0.0
    for k, group in enumerate(partition.groups):
        inst = max(vnfs[i - 1].instantiation_delay for i in group)
        proc = 0.0
        for j, i in enumerate(group):
            f = vnfs[i - 1]
            if k == 0 and j == 0:
                scale = 1.0
            elif j == 0:
                # first VNF of a later group consumes the previous group's last output
                scale = vnfs[partition.groups[k - 1][-1] - 1].output_ratio
            else:
                scale = vnfs[group[j - 1] - 1].output_ratio
            proc += scale * chi / (f.compute_demand * GHZ)
        total += inst + proc
    return total


def local_energy(task: Task, x: float, md: MobileDevice) -> float:
    _check_x(x)
    if x == 1.0:
        return 0.0
    base = (1.0 - x) * task.input_bits * task.cycles_per_bit * md.capacitance_coefficient
    xi_prev = 1.0
    total = 0.0
    for f in task.chain.vnfs:
        total += xi_prev * base * (f.compute_demand * GHZ) ** 2
        xi_prev = f.output_ratio
    return total
