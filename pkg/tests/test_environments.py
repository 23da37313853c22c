import numpy as np
import pytest
from hypothesis import given, strategies as st

from mecsfc.config import ExperimentConfig
import oracle
from mecsfc.cost import Feasibility, SlotResult
from mecsfc.environments import (OffloadRatio, StagedTransition, StagedTransitionBuffer, apply_dur,
                                 ei_observe, ei_stage_step, exchange, md_observe, md_reward, snap_ratio)
from mecsfc.edge_exec import make_placement
from mecsfc.errors import UsageError
from mecsfc.orchestrator import Runner
from mecsfc.workload import ServiceChain, Task, VnfSpec, generate_task


def runner(seed=0, **over):
    cfg = ExperimentConfig().replace(**{"run.scheme": "random", "run.seed": seed, **over})
    return Runner(cfg)


def chain_task(cps, br=None):
    n = len(cps)
    br = br or (8.0,) * (n - 1)
    return Task(ServiceChain(tuple(VnfSpec(i + 1, c, 0.1, 1.0) for i, c in enumerate(cps)), tuple(br)),
                900e3, 900, 30.0)


# -- MD side -------------------------------------------------------------

def test_md_state_padding_and_cp_feature():
    r = runner()
    t = chain_task([0.2, 0.3, 0.4])
    r.md_env.begin_slot(t)
    s = md_observe(r.md_env)
    assert s.shape == (r.encoder.md_dim,)
    n_max = 5
    cp_slots = s[1:1 + n_max]
    br_slots = s[1 + n_max:1 + n_max + n_max - 1]
    assert np.all(cp_slots[3:] == 0) and np.all(cp_slots[:3] > 0)
    assert np.all(br_slots[2:] == 0) and np.all(br_slots[:2] > 0)
    assert s[-1] == pytest.approx(0.375)
    assert np.array_equal(s, md_observe(r.md_env, t))


def test_md_reward_branches():
    ok = SlotResult(0, 0, 0, 0, 0, 0, 0, 1.5, Feasibility())
    assert md_reward(ok, 100) == -1.5
    bad = SlotResult(0, 0, 0, 0, 0, 0, 0, 1.5, Feasibility(c7=False))
    assert md_reward(bad, 100) == -100
    zero = SlotResult(0, 0, 0, 0, 0, 0, 0, 0.0, Feasibility())
    assert md_reward(zero, 100) == 0


# -- EI side -------------------------------------------------------------

def start_ei(r, task, x=0.6):
    r.md_env.begin_slot(task)
    r.ei_env.begin_slot(task, OffloadRatio(x), r.md_env.uplink, r.md_env.downlink)
    return r.ei_env


def test_placement_vector_progression():
    r = runner()
    ei = start_ei(r, chain_task([0.2, 0.3, 0.1]))
    st1 = ei_observe(ei)
    assert st1.stage == 1 and st1.placement == (-1,) * 5
    tr, st2 = ei_stage_step(ei, 4)
    assert st2.placement == (4, -1, -1, -1, -1) and st2.stage == 2
    # station 4's compute feature dropped by the reserved demand
    off = len(st1.vector) - r.infra.n_stations - len(r.infra.links)
    scale = r.encoder.bs_cp_max
    assert (st1.vector[off + 4] - st2.vector[off + 4]) * scale == pytest.approx(0.2)
    ei.release()


def test_stage_rewards_before_dur():
    r = runner()
    r.infra.stations[3].compute_available = 0.05
    r.infra.stations[3].compute_capacity_total = 0.05
    ei = start_ei(r, chain_task([0.2, 0.3, 0.1]))
    tr1, _ = ei.step(0)
    assert tr1.reward == 0 and tr1.penalty == 0
    tr2, _ = ei.step(3)  # 0.3 GHz on a 0.05 GHz station
    assert tr2.penalty == 100 and tr2.reward == -100
    tr3, nxt = ei.step(0)
    assert nxt is None
    o = ei.outcome
    term = 0.5 * o.edge_delay + 0.5 * o.usage_charge
    assert tr3.reward == pytest.approx(-(term + tr3.penalty), rel=1e-15)
    assert ei.final_reward_component == term
    ei.release()
    assert 0.5 * 2.12 + 0.5 * 0.477 == pytest.approx(1.2985, rel=1e-12)


def test_ei_misuse():
    r = runner()
    t = chain_task([0.2, 0.3])
    r.md_env.begin_slot(t)
    with pytest.raises(UsageError):
        r.ei_env.begin_slot(t, OffloadRatio(0.0), 1, 1)
    ei = start_ei(r, t)
    with pytest.raises(UsageError):
        ei.step(99)
    with pytest.raises(UsageError):
        ei.edge_results(Feasibility())
    ei.step(0)
    ei.step(1)
    with pytest.raises(UsageError):
        ei.observe()
    ei.release()


# -- DUR -----------------------------------------------------------------

def staged(rewards):
    b = StagedTransitionBuffer(len(rewards))
    for i, r in enumerate(rewards, start=1):
        b.add(StagedTransition(np.zeros(2), 0, r, -r if i < len(rewards) else 0.0, None, i))
    return b


def test_dur_traces():
    R = 5.0
    assert [t.reward for t in apply_dur(staged([0.0, 0.0, -5.0]), R)] == [-5, -5, -5]
    assert [t.reward for t in apply_dur(staged([0.0, -10.0, -5.0]), R)] == [-5, -15, -5]
    assert [t.reward for t in apply_dur(staged([-1.0, -2.0, -3.0]), 0.0)] == [-1, -2, -3]


def test_dur_needs_full_buffer():
    b = StagedTransitionBuffer(3)
    b.add(StagedTransition(np.zeros(2), 0, 0.0, 0.0, None, 1))
    with pytest.raises(UsageError):
        apply_dur(b, 1.0)
    full = staged([0.0, 0.0])
    with pytest.raises(UsageError):
        full.add(StagedTransition(np.zeros(2), 0, 0.0, 0.0, None, 3))


# -- exchange ------------------------------------------------------------

def run_slot(r, task, x, hosts=None):
    r.md_env.begin_slot(task)
    seq = iter(hosts) if hosts is not None else None
    place = (lambda s: next(seq)) if seq else (lambda s: 0)
    return exchange(r.md_env, r.ei_env, x, place, r.cfg.cost)


def test_local_only_slot():
    r = runner()
    t = generate_task(r.cfg.workload, 1, np.random.default_rng(0))
    out = run_slot(r, t, 0.0)
    assert out.transitions == [] and out.hosts == ()
    assert out.result.edge_delay == out.result.edge_energy == out.result.usage_charge == 0


def test_edge_only_slot():
    r = runner()
    t = generate_task(r.cfg.workload, 1, np.random.default_rng(0))
    out = run_slot(r, t, 1.0)
    assert out.result.local_delay == 0 and out.result.local_energy == 0
    assert len(out.transitions) == t.chain.n


def test_infeasible_partition_still_prices_slot():
    r = runner(**{"device.compute_ghz": 0.15})
    t = chain_task([0.2, 0.1, 0.3])
    out = run_slot(r, t, 0.5, [0, 1, 2])
    assert not out.result.feasibility.c4
    assert out.md_reward == -100


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_slot_conservation_and_release(seed, x):
    r = runner(seed % 7)
    rng = np.random.default_rng(seed)
    before = r.infra.snapshot()
    t = generate_task(r.cfg.workload, 1, rng)
    hosts = [int(h) for h in rng.integers(0, r.infra.n_stations, t.chain.n)]
    calls = []

    def place(state):
        calls.append(state.stage)
        return hosts[state.stage - 1]

    r.md_env.begin_slot(t)
    out = exchange(r.md_env, r.ei_env, x, place, r.cfg.cost)
    assert r.infra.snapshot() == before and r.infra.outstanding == 0
    if x > 0:
        assert calls == list(range(1, t.chain.n + 1))
        assert len(out.transitions) == t.chain.n
        R = out.edge.final_reward_component
        pens = [tr.penalty for tr in out.transitions]
        for tr, p in zip(out.transitions[:-1], pens[:-1]):
            assert tr.reward == -p - R
        assert out.transitions[-1].reward == -(R + pens[-1])
    else:
        assert calls == [] and out.transitions == []
    v = r.encoder.md_state(t, r.md)
    assert np.all(np.isfinite(v)) and np.all(v >= 0) and np.all(v <= 1 + 1e-12)


def test_snap_ratio():
    assert snap_ratio(0.3, 0.0) == 0.3
    assert snap_ratio(0.005, 0.01) == 0.0
    assert snap_ratio(0.995, 0.01) == 1.0


def test_exchange_matches_reference():
    for seed in range(40):
        r = runner(seed % 5)
        rng = np.random.default_rng(seed)
        t = generate_task(r.cfg.workload, 1, rng)
        x = float(rng.uniform(0.05, 0.95))
        hosts = [int(h) for h in rng.integers(0, r.infra.n_stations, t.chain.n)]
        pl = make_placement(r.infra, hosts)
        bs = r.infra.stations[r.infra.access_station]
        out = run_slot(r, t, x, hosts)
        sc = dict(cp=[f.compute_demand for f in t.chain.vnfs], di=[f.instantiation_delay for f in t.chain.vnfs],
                  xi=[f.output_ratio for f in t.chain.vnfs], br=list(t.chain.inter_vnf_bandwidth),
                  d=t.input_bits, c=t.cycles_per_bit, x=x, deadline=t.deadline, cp_md=0.6, kappa=1e-26,
                  up=oracle.shannon(20e6, 0.5, oracle.gain(bs.distance_to_md), 1e-6),
                  down=oracle.shannon(20e6, bs.tx_power, oracle.gain(bs.distance_to_md), 1e-6),
                  p_tr=0.5, p_re=0.1,
                  first_bw=[r.infra.links[l].bandwidth_total for l in pl.first_segment.link_sequence],
                  last_bw=[r.infra.links[l].bandwidth_total for l in pl.last_segment.link_sequence],
                  alpha=1.0, beta=0.1, w=[1 / 3] * 3)
        ref = oracle.evaluate(sc)
        res = out.result
        for got, k in ((res.local_delay, "DL"), (res.edge_delay, "DE"), (res.md_energy, "EC"),
                       (res.usage_charge, "UC"), (res.cost, "Cost")):
            assert got == pytest.approx(ref[k], rel=1e-9), k
