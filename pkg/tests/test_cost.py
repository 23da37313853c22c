import numpy as np
import pytest
from hypothesis import given, strategies as st

from mecsfc.cost import CostWeights, Feasibility, Normalization, check_constraints, task_cost
from mecsfc.edge_exec import make_placement
from mecsfc.errors import ConfigurationError
from mecsfc.local_exec import MobileDevice, partition_into_groups
from mecsfc.topology import ResourceDemand, reserve_slot_resources
from mecsfc.workload import ServiceChain, Task, VnfSpec
from test_topology import make_infra

EQ = CostWeights()


def test_weighted_cost():
    r = task_cost(3.0, 0.6, 1.0, 0.0, 0.9, EQ)
    assert r.execution_delay == 3.0
    assert r.cost == pytest.approx(1.5, rel=1e-15)
    assert task_cost(2.0, 0, 3.0, 0, 0, EQ).execution_delay == 3.0
    assert task_cost(2.0, 5, 3.0, 7, 9, CostWeights(1, 0, 0)).cost == 3.0


def test_weights_must_sum_to_one():
    with pytest.raises(ConfigurationError):
        CostWeights(0.5, 0.5, 0.5)


def test_normalization_applied():
    n = Normalization((0.0, 10.0), (0.0, 2.0), (0.0, 1.0))
    r = task_cost(5.0, 1.0, 0.0, 0.0, 0.5, EQ, normalization=n)
    assert r.cost == pytest.approx(0.5, rel=1e-15)


@given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 100), st.floats(0, 10),
       st.sampled_from(["dc", "ec", "uc"]), st.floats(0, 1), st.floats(0, 1))
def test_cost_monotone(dc, ec, uc, bump, which, w1, w2):
    w = np.array([w1, w2, 1.0]) / (w1 + w2 + 1.0)
    weights = CostWeights(w[0], w[1], 1 - w[0] - w[1])
    base = task_cost(dc, ec, 0, 0, uc, weights).cost
    args = dict(dc=dc, ec=ec, uc=uc)
    args[which] += bump
    assert task_cost(args["dc"], args["ec"], 0, 0, args["uc"], weights).cost >= base - 1e-12


def _task(deadline=30.0, cps=(0.3, 0.2), br=(8.0,)):
    vnfs = tuple(VnfSpec(i + 1, c, 0.1, 1.0) for i, c in enumerate(cps))
    return Task(ServiceChain(vnfs, br), 1e6, 1000, deadline)


def test_ratio_out_of_range():
    infra = make_infra(2, [(0, 1)])
    md = MobileDevice(0.6)
    t = _task()
    f = check_constraints(t, 1.2, make_placement(infra, [0, 1]), None, 0.0, 1.0, infra, md)
    assert not f.c1


def test_deadline_boundary_inclusive():
    infra = make_infra(2, [(0, 1)])
    md = MobileDevice(0.6)
    t = _task(deadline=12.5)
    p = partition_into_groups(t.chain, md)
    assert check_constraints(t, 0.0, None, p, 12.5, 0.0, infra, md).c3
    assert not check_constraints(t, 0.0, None, p, 12.5000001, 0.0, infra, md).c3
    pl = make_placement(infra, [0, 1])
    assert check_constraints(t, 1.0, pl, p, 0.0, 12.5, infra, md).c7
    assert not check_constraints(t, 1.0, pl, p, 0.0, 13.0, infra, md).c7


def test_bandwidth_shortfall_flags_c6():
    infra = make_infra(2, [(0, 1)], bw=[7.0])
    md = MobileDevice(0.6)
    t = _task(br=(8.0,))
    f = check_constraints(t, 0.5, make_placement(infra, [0, 1]), None, 1.0, 1.0, infra, md)
    assert not f.c6 and f.c5
    assert f.violated() == ["C4", "C6"]  # no partition given -> grouping failed


def test_compute_shortfall_flags_c5():
    infra = make_infra(2, [(0, 1)], cp=[0.4, 4.0])
    md = MobileDevice(0.6)
    t = _task(cps=(0.3, 0.2))
    p = partition_into_groups(t.chain, md)
    assert not check_constraints(t, 0.5, make_placement(infra, [0, 0]), p, 1, 1, infra, md).c5
    assert check_constraints(t, 0.5, make_placement(infra, [0, 1]), p, 1, 1, infra, md).all


def test_checks_use_slot_start_ledger_and_are_pure():
    infra = make_infra(2, [(0, 1)], cp=[0.5, 4.0])
    md = MobileDevice(0.6)
    t = _task()
    p = partition_into_groups(t.chain, md)
    pl = make_placement(infra, [0, 1])
    reserve_slot_resources(infra, pl.demands(t))  # the slot's own reservation
    snap = infra.snapshot()
    a = check_constraints(t, 0.5, pl, p, 1, 1, infra, md)
    b = check_constraints(t, 0.5, pl, p, 1, 1, infra, md)
    assert a == b and a.all
    assert infra.snapshot() == snap


def test_skipped_pipelines_are_satisfied():
    infra = make_infra(2, [(0, 1)], cp=[0.1, 0.1])
    md = MobileDevice(0.1)
    t = _task()
    # x=1: no local pipeline, so C3/C4 hold even though the VNFs exceed cp_MD
    f = check_constraints(t, 1.0, make_placement(infra, [0, 1]), None, 0.0, 1.0, infra, md)
    assert f.c3 and f.c4 and not f.c5
    # x=0: no edge pipeline
    f = check_constraints(t, 0.0, None, None, 1.0, 0.0, infra, md)
    assert f.c2 and f.c5 and f.c6 and f.c7 and not f.c4


def test_feasibility_helpers():
    f = Feasibility(c3=False)
    assert not f.all and f.violated() == ["C3"]
    assert Feasibility().all
