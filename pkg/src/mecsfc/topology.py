"""Edge infrastructure graph, shortest-path routing and the per-slot resource ledger."""
from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import TopologyConfig
from .errors import ConfigurationError, InfeasibleReservation, RoutingError, UsageError


@dataclass
class BaseStation:
    id: int
    compute_capacity_total: float  # GHz
    compute_available: float  # GHz
    tx_power: float  # W
    distance_to_md: float  # m


@dataclass
class WiredLink:
    id: int
    endpoints: tuple[int, int]
    bandwidth_total: float  # Mbps
    bandwidth_available: float  # Mbps

    def other(self, station):
        a, b = self.endpoints
        return b if station == a else a


@dataclass(frozen=True)
class RoutePath:
    station_sequence: tuple[int, ...] = ()
    link_sequence: tuple[int, ...] = ()

    def __len__(self):
        return len(self.link_sequence)

    @property
    def empty(self):
        return not self.link_sequence


EMPTY_PATH = RoutePath()


@dataclass
class ReservationReceipt:
    compute: dict[int, float] = field(default_factory=dict)
    bandwidth: dict[int, float] = field(default_factory=dict)
    released: bool = False

    @property
    def empty(self):
        return not self.compute and not self.bandwidth


class EdgeInfrastructure:
    """Undirected BS graph with a compute/bandwidth ledger.

    Reservations are all-or-nothing. While any receipt is outstanding the
    ledger remembers the values it had when the first one was issued, so
    releasing the last receipt restores it bit-for-bit.
    """

    def __init__(self, stations, links, routing="hops"):
        self.stations = list(stations)
        self.links = list(links)
        self.routing = routing
        self.adjacency = {s.id: [] for s in self.stations}
        for link in self.links:
            a, b = link.endpoints
            if a == b:
                raise ConfigurationError(f"link {link.id} is a self-loop")
            self.adjacency[a].append(link.id)
            self.adjacency[b].append(link.id)
        self._paths = {}
        self._outstanding = 0
        self._baseline = None

    @property
    def n_stations(self):
        return len(self.stations)

    @property
    def access_station(self):
        """Closest BS to the mobile device (v_MD); ties go to the lowest id."""
        return min(self.stations, key=lambda s: (s.distance_to_md, s.id)).id

    def is_connected(self):
        if not self.stations:
            return False
        seen = {self.stations[0].id}
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for lid in self.adjacency[u]:
                v = self.links[lid].other(u)
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(self.stations)

    # ledger views -----------------------------------------------------
    def compute_vector(self):
        return np.array([s.compute_available for s in self.stations])

    def bandwidth_vector(self):
        return np.array([link.bandwidth_available for link in self.links])

    def snapshot(self):
        return (tuple(s.compute_available for s in self.stations),
                tuple(link.bandwidth_available for link in self.links))

    def restore(self, snap):
        cp, bw = snap
        for s, v in zip(self.stations, cp):
            s.compute_available = v
        for link, v in zip(self.links, bw):
            link.bandwidth_available = v

    def slot_snapshot(self):
        """Ledger values at the start of the current slot (before any reservation)."""
        return self._baseline if self._outstanding else self.snapshot()

    @property
    def outstanding(self):
        return self._outstanding

    # serialization ------------------------------------------------------
    def to_dict(self):
        return {
            "routing": self.routing,
            "stations": [vars(s).copy() for s in self.stations],
            "links": [{**vars(link), "endpoints": list(link.endpoints)} for link in self.links],
        }

    @classmethod
    def from_dict(cls, data):
        stations = [BaseStation(**s) for s in data["stations"]]
        links = [WiredLink(**{**l, "endpoints": tuple(l["endpoints"])}) for l in data["links"]]
        return cls(stations, links, routing=data.get("routing", "hops"))

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def _uniform(rng, lo_hi, size=None):
    lo, hi = lo_hi
    if lo == hi:
        return np.full(size, float(lo)) if size is not None else float(lo)
    return rng.uniform(lo, hi, size)


def build_infrastructure(config: TopologyConfig, rng: np.random.Generator) -> EdgeInfrastructure:
    """Random connected G(n, p) graph with Table-2 style capacity draws."""
    config.validate()
    n = config.n_stations
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for _ in range(config.max_attempts):
        mask = rng.random(len(pairs)) < config.edge_probability
        edges = [p for p, keep in zip(pairs, mask) if keep]
        cp = _uniform(rng, config.compute_ghz, n)
        dist = _uniform(rng, config.distance_m, n)
        ptx = _uniform(rng, config.bs_tx_power_w, n)
        bw = _uniform(rng, config.bandwidth_mbps, len(edges))
        stations = [BaseStation(i, float(cp[i]), float(cp[i]), float(ptx[i]), float(dist[i])) for i in range(n)]
        links = [WiredLink(k, e, float(bw[k]), float(bw[k])) for k, e in enumerate(edges)]
        infra = EdgeInfrastructure(stations, links, routing=config.routing)
        if infra.is_connected():
            return infra
    raise ConfigurationError(
        f"no connected graph after {config.max_attempts} attempts (n={n}, p={config.edge_probability})")


def _link_weight(infra, link):
    if infra.routing == "inverse_bandwidth":
        return 1.0 / link.bandwidth_total
    return 1.0


def shortest_path(infra: EdgeInfrastructure, src: int, dst: int) -> RoutePath:
    """Dijkstra over hop counts (or 1/bandwidth). Ties resolve to lower station ids."""
    n = infra.n_stations
    if not (0 <= src < n and 0 <= dst < n):
        raise RoutingError(f"invalid station id in ({src}, {dst})")
    if src == dst:
        return EMPTY_PATH
    key = (src, dst)
    cached = infra._paths.get(key)
    if cached is not None:
        return cached

    dist = {src: 0.0}
    prev = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        for lid in infra.adjacency[u]:
            link = infra.links[lid]
            v = link.other(u)
            nd = d + _link_weight(infra, link)
            if nd < dist.get(v, math.inf) or (nd == dist.get(v) and u < prev[v][0]):
                dist[v] = nd
                prev[v] = (u, lid)
                heapq.heappush(heap, (nd, v))
    if dst not in prev:
        raise RoutingError(f"station {dst} unreachable from {src}")

    stations, links = [dst], []
    node = dst
    while node != src:
        node, lid = prev[node]
        stations.append(node)
        links.append(lid)
    path = RoutePath(tuple(reversed(stations)), tuple(reversed(links)))
    infra._paths[key] = path
    return path


def path_min_bandwidth(infra: EdgeInfrastructure, path: RoutePath, slot_start=False) -> float:
    if path.empty:
        return math.inf
    if slot_start:
        bw = infra.slot_snapshot()[1]
        return min(bw[lid] for lid in path.link_sequence)
    return min(infra.links[lid].bandwidth_available for lid in path.link_sequence)


@dataclass
class ResourceDemand:
    """Compute demands per station and bandwidth demands per routed segment."""

    compute: list[tuple[int, float]] = field(default_factory=list)  # (station, GHz)
    bandwidth: list[tuple[RoutePath, float]] = field(default_factory=list)  # (path, Mbps)


def reserve_slot_resources(infra: EdgeInfrastructure, demand: ResourceDemand) -> ReservationReceipt:
    compute: dict[int, float] = {}
    for station, amount in demand.compute:
        if not 0 <= station < infra.n_stations:
            raise InfeasibleReservation("C2", f"station {station} not in V")
        if amount < 0:
            raise UsageError("negative compute demand")
        if amount > 0:
            compute[station] = compute.get(station, 0.0) + amount
    bandwidth: dict[int, float] = {}
    for path, amount in demand.bandwidth:
        if amount < 0:
            raise UsageError("negative bandwidth demand")
        if amount > 0:
            for lid in path.link_sequence:
                bandwidth[lid] = bandwidth.get(lid, 0.0) + amount

    for station, amount in compute.items():
        avail = infra.stations[station].compute_available
        if amount > avail:
            raise InfeasibleReservation("C5", f"station {station} needs {amount:g} GHz, {avail:g} available")
    for lid, amount in bandwidth.items():
        avail = infra.links[lid].bandwidth_available
        if amount > avail:
            raise InfeasibleReservation("C6", f"link {lid} needs {amount:g} Mbps, {avail:g} available")

    receipt = ReservationReceipt(compute, bandwidth)
    if receipt.empty:
        return receipt
    if infra._outstanding == 0:
        infra._baseline = infra.snapshot()
    infra._outstanding += 1
    for station, amount in compute.items():
        infra.stations[station].compute_available -= amount
    for lid, amount in bandwidth.items():
        infra.links[lid].bandwidth_available -= amount
    return receipt


def release_slot(infra: EdgeInfrastructure, receipt: ReservationReceipt) -> None:
    if receipt.released:
        raise UsageError("reservation receipt already released")
    receipt.released = True
    if receipt.empty:
        return
    infra._outstanding -= 1
    if infra._outstanding == 0:
        infra.restore(infra._baseline)
        infra._baseline = None
        return
    for station, amount in receipt.compute.items():
        s = infra.stations[station]
        s.compute_available = min(s.compute_available + amount, s.compute_capacity_total)
    for lid, amount in receipt.bandwidth.items():
        link = infra.links[lid]
        link.bandwidth_available = min(link.bandwidth_available + amount, link.bandwidth_total)
