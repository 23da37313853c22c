"""MD and EI environments, their state encodings, rewards, DUR and the slot exchange.

One slot runs as: the MD side emits an offloading ratio x; if x > 0 the EI
side places the chain one VNF per stage (reserving compute and bandwidth on
the live ledger), computes the edge results, and hands them back; the MD
side then prices the slot. Reservations are released before returning.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import CostConfig, DeviceConfig, TopologyConfig, WorkloadConfig
from .cost import CostWeights, Feasibility, Normalization, SlotResult, check_constraints, task_cost
from .edge_exec import ZERO_OUTCOME, EdgeOutcome, evaluate_edge, make_placement
from .errors import ConstraintViolation, InfeasibleReservation, UsageError
from .local_exec import MobileDevice, local_delay, local_energy, partition_into_groups, singleton_partition
from .topology import (EdgeInfrastructure, ResourceDemand, release_slot, reserve_slot_resources,
                       shortest_path)
from .workload import Task, radio_rates


class StateEncoder:
    """Fixed-size, [0, 1]-scaled feature vectors for both agents."""

    def __init__(self, workload: WorkloadConfig, device: DeviceConfig, topology: TopologyConfig,
                 n_links: int):
        self.n_max = workload.max_vnfs
        self.cp_max = workload.vnf_compute_ghz[1]
        self.br_max = workload.inter_vnf_mbps[1]
        self.d_max = workload.data_kbits[1] * 1e3
        self.c_max = workload.cycles_per_bit[1]
        self.deadline_max = workload.deadline_s[1]
        self.md_cp_max = device.max_compute_ghz
        self.n_stations = topology.n_stations
        self.bs_cp_max = topology.compute_ghz[1]
        self.bw_max = topology.bandwidth_mbps[1]
        self.n_links = n_links

    @property
    def md_dim(self):
        return 1 + self.n_max + (self.n_max - 1) + 4

    @property
    def ei_dim(self):
        return (1 + self.n_max + (self.n_max - 1)) + 2 + self.n_stations + 1 + self.n_max \
            + self.n_stations + self.n_links

    def chain_summary(self, task: Task):
        chain = task.chain
        out = np.zeros(1 + self.n_max + self.n_max - 1)
        out[0] = chain.n / self.n_max
        out[1:1 + chain.n] = [f.compute_demand / self.cp_max for f in chain.vnfs]
        br = chain.inter_vnf_bandwidth
        out[1 + self.n_max:1 + self.n_max + len(br)] = [b / self.br_max for b in br]
        return out

    def md_state(self, task: Task, md: MobileDevice):
        tail = [task.input_bits / self.d_max, task.cycles_per_bit / self.c_max,
                task.deadline / self.deadline_max, min(md.compute_capacity / self.md_cp_max, 1.0)]
        return np.concatenate([self.chain_summary(task), tail])

    def ei_state(self, task: Task, x, access_station, hosts, infra: EdgeInfrastructure):
        onehot = np.zeros(self.n_stations)
        onehot[access_station] = 1.0
        placed = np.zeros(self.n_max)
        for i, h in enumerate(hosts):
            placed[i] = (h + 1) / self.n_stations  # -1 (unplaced) encodes as 0
        return np.concatenate([
            self.chain_summary(task),
            [task.input_bits / self.d_max, task.deadline / self.deadline_max],
            onehot,
            [x],
            placed,
            infra.compute_vector() / self.bs_cp_max,
            infra.bandwidth_vector() / self.bw_max,
        ])


@dataclass
class EiState:
    stage: int
    placement: tuple[int, ...]  # L, -1 for unplaced
    vector: np.ndarray


@dataclass
class StagedTransition:
    state: np.ndarray
    action: int
    reward: float
    penalty: float
    next_state: np.ndarray | None
    stage: int


@dataclass
class StagedTransitionBuffer:
    n_stages: int
    transitions: list[StagedTransition] = field(default_factory=list)

    def __len__(self):
        return len(self.transitions)

    def add(self, tr: StagedTransition):
        if len(self.transitions) >= self.n_stages:
            raise UsageError("staged buffer already holds every stage of the slot")
        self.transitions.append(tr)

    @property
    def complete(self):
        return len(self.transitions) == self.n_stages


@dataclass(frozen=True)
class OffloadRatio:
    x: float


@dataclass(frozen=True)
class EdgeResults:
    edge_delay: float
    edge_energy: float
    usage_charge: float
    feasibility: Feasibility
    outcome: EdgeOutcome = ZERO_OUTCOME
    placement: object = None
    final_reward_component: float = 0.0


def md_reward(slot_result: SlotResult, penalty: float) -> float:
    return -slot_result.cost if slot_result.feasibility.all else -float(penalty)


def apply_dur(buffer: StagedTransitionBuffer, final_reward_component: float) -> list[StagedTransition]:
    """Subtract the end-of-chain reward term from every non-final stage reward."""
    if not buffer.complete:
        raise UsageError(f"DUR needs {buffer.n_stages} staged transitions, have {len(buffer)}")
    out = []
    last = len(buffer.transitions) - 1
    for i, tr in enumerate(buffer.transitions):
        r = tr.reward if i == last else tr.reward - final_reward_component
        out.append(StagedTransition(tr.state, tr.action, r, tr.penalty, tr.next_state, tr.stage))
    return out


class MdEnvironment:
    def __init__(self, md: MobileDevice, infra: EdgeInfrastructure, encoder: StateEncoder, channel):
        self.md = md
        self.infra = infra
        self.encoder = encoder
        self.channel = channel
        self.uplink, self.downlink = radio_rates(infra, channel)
        self.task = None

    def begin_slot(self, task: Task):
        self.task = task

    def observe(self, task: Task | None = None):
        return self.encoder.md_state(task or self.task, self.md)

    def local_results(self, x):
        task = self.task
        try:
            partition = partition_into_groups(task.chain, self.md)
        except ConstraintViolation:
            partition = None
        dl = local_delay(task, x, partition or singleton_partition(task.chain))
        el = local_energy(task, x, self.md)
        return partition, dl, el


class EiEnvironment:
    def __init__(self, infra: EdgeInfrastructure, md: MobileDevice, encoder: StateEncoder,
                 cost: CostConfig):
        self.infra = infra
        self.md = md
        self.encoder = encoder
        self.cost = cost
        self.access = infra.access_station
        self._task = None

    # -- slot lifecycle --------------------------------------------------
    def begin_slot(self, task: Task, msg: OffloadRatio, uplink, downlink):
        if msg.x <= 0.0:
            raise UsageError("EI environment invoked with x = 0 (edge pipeline skipped)")
        if self.infra.outstanding:
            raise UsageError("previous slot left resources reserved")
        self._task = task
        self.x = msg.x
        self.uplink, self.downlink = uplink, downlink
        self.hosts: list[int] = []
        self.receipts = []
        self.staged = StagedTransitionBuffer(task.chain.n)
        self.stage_flags = {"c5": True, "c6": True, "c7": True}
        self.final_reward_component = 0.0
        self.outcome = None
        self.placement = None

    @property
    def stage(self):
        return len(self.hosts) + 1

    def observe(self) -> EiState:
        if self._task is None:
            raise UsageError("EI environment has no active slot")
        if self.stage > self._task.chain.n:
            raise UsageError("every VNF of this slot is already placed")
        L = tuple(self.hosts) + (-1,) * (self.encoder.n_max - len(self.hosts))
        vec = self.encoder.ei_state(self._task, self.x, self.access, self.hosts, self.infra)
        return EiState(self.stage, L, vec)

    def _try_reserve(self, demand):
        try:
            self.receipts.append(reserve_slot_resources(self.infra, demand))
            return 0
        except InfeasibleReservation:
            return 1

    def step(self, action: int):
        """Place the current VNF on ``action``; returns (staged transition, next state or None)."""
        task = self._task
        n = task.chain.n
        if not 0 <= action < self.infra.n_stations:
            raise UsageError(f"action {action} is not a station id")
        state = self.observe()
        i = state.stage
        f = task.chain.vnfs[i - 1]
        mu5, mu6, mu7 = self.cost.stage_penalties

        theta5 = self._try_reserve(ResourceDemand(compute=[(action, f.compute_demand)]))
        theta6 = 0
        if i >= 2:
            path = shortest_path(self.infra, self.hosts[-1], action)
            theta6 = self._try_reserve(ResourceDemand(bandwidth=[(path, task.chain.inter_vnf_bandwidth[i - 2])]))
        self.hosts.append(int(action))

        theta7 = 0
        reward_term = 0.0
        if i == n:
            self.placement = make_placement(self.infra, self.hosts, self.access)
            self.outcome = evaluate_edge(task, self.x, self.placement, self.uplink, self.downlink,
                                         self.infra, self.md, self.cost.price_alpha, self.cost.price_beta)
            theta7 = int(self.outcome.edge_delay > task.deadline)
            w1, w2 = self.cost.placement_weights
            reward_term = w1 * self.outcome.edge_delay + w2 * self.outcome.usage_charge
            self.final_reward_component = reward_term
        self.stage_flags["c5"] &= not theta5
        self.stage_flags["c6"] &= not theta6
        self.stage_flags["c7"] &= not theta7

        penalty = mu5 * theta5 + mu6 * theta6 + mu7 * theta7
        next_state = self.observe() if i < n else None
        tr = StagedTransition(state.vector, int(action), -(reward_term + penalty), penalty,
                              None if next_state is None else next_state.vector, i)
        self.staged.add(tr)
        return tr, next_state

    def edge_results(self, feasibility: Feasibility) -> EdgeResults:
        if self.outcome is None:
            raise UsageError("edge results requested before the last stage")
        o = self.outcome
        return EdgeResults(o.edge_delay, o.edge_energy, o.usage_charge, feasibility, o, self.placement,
                           self.final_reward_component)

    def release(self):
        for receipt in self.receipts:
            release_slot(self.infra, receipt)
        self.receipts = []
        self._task = None


def ei_observe(ei_env: EiEnvironment) -> EiState:
    return ei_env.observe()


def ei_stage_step(ei_env: EiEnvironment, action: int):
    return ei_env.step(action)


def md_observe(md_env: MdEnvironment, task: Task | None = None):
    return md_env.observe(task)


@dataclass
class SlotOutcome:
    x: float
    result: SlotResult
    md_reward: float
    edge: EdgeResults
    hosts: tuple[int, ...]
    transitions: list[StagedTransition]  # DUR-finalised; empty when x = 0
    stage_flags: dict

    @property
    def stage_rewards(self):
        return [t.reward for t in self.transitions]


def snap_ratio(x, eps):
    if eps > 0.0:
        if x < eps:
            return 0.0
        if x > 1.0 - eps:
            return 1.0
    return x


def exchange(md_env: MdEnvironment, ei_env: EiEnvironment, x, place, cost: CostConfig) -> SlotOutcome:
    """Run one slot of the MD <-> EI protocol.

    ``place`` maps an ``EiState`` to a station id; it is called once per VNF
    and never when x = 0.
    """
    task = md_env.task
    x = snap_ratio(float(x), cost.boundary_epsilon)
    partition, dl, el = md_env.local_results(x)
    staged: list[StagedTransition] = []
    placement = None
    stage_flags = {}
    if x > 0.0:
        ei_env.begin_slot(task, OffloadRatio(x), md_env.uplink, md_env.downlink)
        try:
            for _ in range(task.chain.n):
                ei_env.step(int(place(ei_env.observe())))
            placement = ei_env.placement
            de = ei_env.outcome.edge_delay
            feas = check_constraints(task, x, placement, partition, dl, de, ei_env.infra, md_env.md)
            edge = ei_env.edge_results(feas)
            staged = apply_dur(ei_env.staged, ei_env.final_reward_component)
            stage_flags = dict(ei_env.stage_flags)
        finally:
            ei_env.release()
    else:
        feas = check_constraints(task, x, None, partition, dl, 0.0, md_env.infra, md_env.md)
        edge = EdgeResults(0.0, 0.0, 0.0, feas)

    weights = CostWeights(*cost.weights)
    norm = (Normalization(cost.delay_bounds, cost.energy_bounds, cost.charge_bounds)
            if cost.normalize else None)
    result = task_cost(dl, el, edge.edge_delay, edge.edge_energy, edge.usage_charge, weights, feas, norm)
    return SlotOutcome(x, result, md_reward(result, cost.md_penalty), edge,
                       tuple(placement.host_per_vnf) if placement else (), staged, stage_flags)
