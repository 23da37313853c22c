"""Weighted delay/energy/charge cost and the C1-C7 feasibility checks."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError


@dataclass(frozen=True)
class CostWeights:
    w_delay: float = 1 / 3
    w_energy: float = 1 / 3
    w_charge: float = 1 / 3

    def __post_init__(self):
        w = (self.w_delay, self.w_energy, self.w_charge)
        if any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigurationError(f"cost weights must be >= 0 and sum to 1, got {w}")


@dataclass(frozen=True)
class Normalization:
    """Min-max bounds applied to (DC, EC, UC) before weighting."""

    delay: tuple[float, float]
    energy: tuple[float, float]
    charge: tuple[float, float]

    @staticmethod
    def _scale(v, bounds):
        lo, hi = bounds
        return (v - lo) / (hi - lo)

    def apply(self, dc, ec, uc):
        return self._scale(dc, self.delay), self._scale(ec, self.energy), self._scale(uc, self.charge)


@dataclass(frozen=True)
class Feasibility:
    c1: bool = True
    c2: bool = True
    c3: bool = True
    c4: bool = True
    c5: bool = True
    c6: bool = True
    c7: bool = True

    @property
    def all(self):
        return all(self.as_tuple())

    def as_tuple(self):
        return (self.c1, self.c2, self.c3, self.c4, self.c5, self.c6, self.c7)

    def violated(self):
        return [f"C{i + 1}" for i, ok in enumerate(self.as_tuple()) if not ok]


@dataclass(frozen=True)
class SlotResult:
    local_delay: float
    edge_delay: float
    execution_delay: float
    local_energy: float
    edge_energy: float
    md_energy: float
    usage_charge: float
    cost: float
    feasibility: Feasibility = field(default_factory=Feasibility)


def task_cost(dl, el, de, ee, uc, weights: CostWeights, feasibility=None,
              normalization: Normalization | None = None) -> SlotResult:
    dc = max(dl, de)
    ec = el + ee
    terms = (dc, ec, uc) if normalization is None else normalization.apply(dc, ec, uc)
    cost = weights.w_delay * terms[0] + weights.w_energy * terms[1] + weights.w_charge * terms[2]
    return SlotResult(dl, de, dc, el, ee, ec, uc, cost, feasibility or Feasibility())


def check_constraints(task, x, placement, partition, dl, de, infra, md) -> Feasibility:
    """Evaluate C1..C7 for one slot. Pure: never touches the ledger.

    C5/C6 compare the placement's total demand per station / per link with
    the ledger as it stood at the start of the slot. ``partition`` may be
    None when grouping failed (C4 violated).
    """
    c1 = 0.0 <= x <= 1.0
    local_on = x < 1.0
    edge_on = x > 0.0
    chain = task.chain

    c3 = (dl <= task.deadline) if local_on else True
    c4 = all(f.compute_demand <= md.compute_capacity for f in chain.vnfs) if local_on else True
    if partition is None and local_on:
        c4 = False

    c2 = c5 = c6 = c7 = True
    if edge_on:
        n = infra.n_stations
        hosts = placement.host_per_vnf if placement is not None else ()
        c2 = len(hosts) == chain.n and all(0 <= h < n for h in hosts)
        if c2:
            cp0, bw0 = infra.slot_snapshot()
            load = {}
            for h, f in zip(hosts, chain.vnfs):
                load[h] = load.get(h, 0.0) + f.compute_demand
            c5 = all(amount <= cp0[h] for h, amount in load.items())
            flow = {}
            for path, br in zip(placement.inter_segments, chain.inter_vnf_bandwidth):
                for lid in path.link_sequence:
                    flow[lid] = flow.get(lid, 0.0) + br
            c6 = all(amount <= bw0[lid] for lid, amount in flow.items())
        else:
            c5 = c6 = False
        c7 = de <= task.deadline
    return Feasibility(c1, c2, c3, c4, c5, c6, c7)
