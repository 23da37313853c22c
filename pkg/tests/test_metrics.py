import numpy as np
import pytest
from hypothesis import given, strategies as st

from mecsfc.metrics import (CellLogs, MissingCellsError, average_ranks, compute_metrics, final_fraction_mean,
                            format_rank_table, friedman_ranks)

SCHEMES = ["binary", "cdadrl", "edge", "local", "random"]


def cell(scheme, cp=0.6, seed=0, dc=(2.0, 4.0), ec=(1.0, 1.0), uc=(0.0, 0.0), cost=None, complete=True,
         train=(-10.0,) * 10):
    cost = cost if cost is not None else [1.0] * len(dc)
    return CellLogs(scheme, cp, seed, list(train), [-5.0], list(dc), list(ec), list(uc), list(cost), complete)


def test_hand_built_means():
    (row,) = compute_metrics([cell("local")])
    assert row.AED == 3.0 and row.AEC == 1.0 and row.AUC == 0.0
    assert row.NAC == 0.0  # alone in its column
    assert row.mean_cumulative_reward == -5.0


def test_nac_min_max_per_column():
    rows = compute_metrics([cell("a", cost=[1, 1]), cell("b", cost=[3, 3]), cell("c", cost=[2, 2]),
                            cell("a", cp=1.6, cost=[5, 5]), cell("b", cp=1.6, cost=[5, 5])])
    nac = {(r.scheme, r.cp_md): r.NAC for r in rows}
    assert nac[("a", 0.6)] == 0 and nac[("b", 0.6)] == 1 and nac[("c", 0.6)] == 0.5
    assert nac[("a", 1.6)] == 0 and nac[("b", 1.6)] == 0
    assert all(0 <= r.NAC <= 1 for r in rows)


def test_incomplete_cells_excluded(caplog):
    rows = compute_metrics([cell("a"), cell("b", complete=False)])
    assert [r.scheme for r in rows] == ["a"]
    assert "excluding incomplete cell" in caplog.text


def test_average_episodic_reward_uses_last_tenth():
    assert final_fraction_mean(list(range(100))) == np.mean(range(90, 100))
    assert final_fraction_mean([1.0, 2.0, 3.0]) == 3.0


def test_uniformly_best_and_worst():
    vals = {s: [3.0 + i] * 6 for i, s in enumerate(SCHEMES)}  # 'binary' lowest everywhere
    vals["cdadrl"] = [0.5] * 6
    vals["local"] = [99.0] * 6
    ranks = {e.scheme: e for e in average_ranks(vals, "AED")}
    assert f"{ranks['cdadrl'].average_rank:.4f}" == "1.0000" and ranks["cdadrl"].position == 1
    assert f"{ranks['local'].average_rank:.4f}" == "5.0000" and ranks["local"].position == 5


def test_ties_share_rank_mean():
    ranks = {e.scheme: e for e in average_ranks({"a": [1.0], "b": [1.0], "c": [0.0]})}
    assert ranks["a"].average_rank == ranks["b"].average_rank == 2.5
    # positions stay a permutation, name order breaks the tie
    assert (ranks["c"].position, ranks["a"].position, ranks["b"].position) == (1, 2, 3)


# integer grid keeps the transform strictly monotone in floating point too
@given(st.lists(st.lists(st.integers(-1000, 1000), min_size=4, max_size=4), min_size=1, max_size=6))
def test_ranks_invariant_under_monotone_transform(cols):
    vals = {s: [float(c[i]) for c in cols] for i, s in enumerate("abcd")}
    base = average_ranks(vals)
    moved = average_ranks({s: [np.arctan(v / 100) * 7 + 3 for v in vs] for s, vs in vals.items()})
    for x, y in zip(base, moved):
        assert (x.average_rank, x.position) == (y.average_rank, y.position)
    assert sorted(e.position for e in base) == [1, 2, 3, 4]
    assert all(1 <= e.average_rank <= 4 for e in base)


def test_friedman_over_cells_and_missing():
    cells = [cell(s, cp=cp, seed=sd, dc=(i + 1.0, i + 1.0), cost=[i, i])
             for i, s in enumerate(SCHEMES) for cp in (0.6, 1.6) for sd in (0, 1)]
    rows = compute_metrics(cells)
    ranks = friedman_ranks(rows)
    aed = {e.scheme: e.average_rank for e in ranks if e.metric == "AED"}
    assert aed == {"binary": 1.0, "cdadrl": 2.0, "edge": 3.0, "local": 4.0, "random": 5.0}
    text = format_rank_table(ranks)
    assert "1.0000" in text and "5.0000" in text
    with pytest.raises(MissingCellsError) as exc:
        friedman_ranks([r for r in rows if not (r.scheme == "edge" and r.cp_md == 1.6)])
    assert exc.value.missing == [("edge", 1.6)]
