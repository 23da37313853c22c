"""Random (task, x, placement) scenarios evaluated by the package and by the oracle."""
import numpy as np

import oracle
from mecsfc.config import TopologyConfig, WorkloadConfig
from mecsfc.cost import CostWeights, task_cost
from mecsfc.edge_exec import evaluate_edge, make_placement
from mecsfc.local_exec import MobileDevice, local_delay, local_energy, partition_into_groups
from mecsfc.topology import build_infrastructure
from mecsfc.workload import Channel, channel_gain, generate_task, radio_rates
from mecsfc.config import ChannelConfig

QUANTITIES = ("DL", "EL", "DT", "DP", "DE", "EU", "ED", "EE", "UC", "DC", "EC", "Cost")


def random_scenario(rng):
    n_bs = int(rng.integers(3, 11))
    topo = TopologyConfig(n_stations=n_bs, edge_probability=float(rng.uniform(0.3, 0.9)))
    infra = build_infrastructure(topo, rng)
    task = generate_task(WorkloadConfig(), int(rng.integers(1, 21)), rng)
    r = rng.random()
    x = 0.0 if r < 0.1 else 1.0 if r < 0.2 else float(rng.uniform(0, 1))
    hosts = [int(h) for h in rng.integers(0, n_bs, task.chain.n)]
    md = MobileDevice(float(rng.uniform(0.6, 1.6)), 0.5, 0.1, 1e-26)
    ch = Channel.from_config(ChannelConfig())
    alpha, beta = float(rng.uniform(0.5, 2)), float(rng.uniform(0.05, 1))
    w = rng.dirichlet(np.ones(3))
    w = w / w.sum()

    up, down = radio_rates(infra, ch)
    placement = make_placement(infra, hosts)
    part = partition_into_groups(task.chain, md)
    dl = local_delay(task, x, part)
    el = local_energy(task, x, md)
    out = evaluate_edge(task, x, placement, up, down, infra, md, alpha, beta)
    res = task_cost(dl, el, out.edge_delay, out.edge_energy, out.usage_charge, CostWeights(*w))
    mod = dict(DL=dl, EL=el, DT=out.transmission_delay, DP=out.processing_delay, DE=out.edge_delay,
               EU=out.uplink_energy, ED=out.downlink_energy, EE=out.edge_energy, UC=out.usage_charge,
               DC=res.execution_delay, EC=res.md_energy, Cost=res.cost)

    bs = infra.stations[infra.access_station]
    g = oracle.gain(bs.distance_to_md)
    sc = dict(
        cp=[f.compute_demand for f in task.chain.vnfs], di=[f.instantiation_delay for f in task.chain.vnfs],
        xi=[f.output_ratio for f in task.chain.vnfs], br=list(task.chain.inter_vnf_bandwidth),
        d=task.input_bits, c=task.cycles_per_bit, x=x, deadline=task.deadline, cp_md=md.compute_capacity,
        kappa=1e-26, up=oracle.shannon(20e6, 0.5, g, 1e-6), down=oracle.shannon(20e6, bs.tx_power, g, 1e-6),
        p_tr=0.5, p_re=0.1,
        first_bw=[infra.links[l].bandwidth_available for l in placement.first_segment.link_sequence],
        last_bw=[infra.links[l].bandwidth_available for l in placement.last_segment.link_sequence],
        alpha=alpha, beta=beta, w=list(w))
    assert abs(channel_gain(bs.distance_to_md, ch) - g) <= 1e-15 * g
    return mod, oracle.evaluate(sc)


def rel_err(a, b):
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))
