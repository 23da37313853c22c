"""AED/AEC/AUC/NAC metrics per experiment cell and Friedman average ranks."""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

log = logging.getLogger(__name__)

RANKED_METRICS = ("AED", "AEC", "AUC", "NAC")


@dataclass
class CellLogs:
    """What the metrics need from one (scheme, cp_MD, seed) run."""

    scheme: str
    cp_md: float
    seed: int
    train_rewards: list[float]  # cumulative reward per training episode
    eval_rewards: list[float]  # cumulative reward per evaluation episode
    dc: list[float]  # per-slot values of the evaluation episodes
    ec: list[float]
    uc: list[float]
    cost: list[float]
    complete: bool = True


@dataclass
class MetricsRow:
    scheme: str
    cp_md: float
    seed: int
    AED: float
    AEC: float
    AUC: float
    NAC: float
    mean_cost: float
    mean_cumulative_reward: float
    average_episodic_reward: float


METRIC_FIELDS = ("scheme", "cp_md", "seed", "AED", "AEC", "AUC", "NAC", "mean_cost",
                 "mean_cumulative_reward", "average_episodic_reward")


def _mean(v):
    return float(np.mean(v)) if len(v) else math.nan


def final_fraction_mean(values, fraction=0.1):
    if not len(values):
        return math.nan
    k = max(1, int(math.ceil(len(values) * fraction)))
    return float(np.mean(values[-k:]))


def compute_metrics(cells: list[CellLogs]) -> list[MetricsRow]:
    """Per-cell means, then NAC = min-max of mean cost across schemes within each (cp_MD, seed)."""
    rows = []
    for c in cells:
        if not c.complete or not c.dc:
            log.warning("excluding incomplete cell %s/cp=%g/seed=%d", c.scheme, c.cp_md, c.seed)
            continue
        rows.append(MetricsRow(
            c.scheme, c.cp_md, c.seed, _mean(c.dc), _mean(c.ec), _mean(c.uc), math.nan, _mean(c.cost),
            _mean(c.eval_rewards) if c.eval_rewards else _mean(c.train_rewards),
            final_fraction_mean(c.train_rewards)))
    groups = defaultdict(list)
    for r in rows:
        groups[(r.cp_md, r.seed)].append(r)
    for members in groups.values():
        costs = np.array([r.mean_cost for r in members])
        lo, hi = costs.min(), costs.max()
        for r, v in zip(members, costs):
            r.NAC = 0.0 if hi == lo else float((v - lo) / (hi - lo))
    rows.sort(key=lambda r: (r.scheme, r.cp_md, r.seed))
    return rows


@dataclass
class RankEntry:
    metric: str
    scheme: str
    average_rank: float
    position: int


RANK_FIELDS = ("metric", "scheme", "average_rank", "position")


class MissingCellsError(ValueError):
    def __init__(self, missing):
        super().__init__("missing cells: " + ", ".join(f"{s}@{sc}" for s, sc in missing))
        self.missing = missing


def average_ranks(values: dict[str, list[float]], metric="value") -> list[RankEntry]:
    """Rank schemes inside each scenario (1 = lowest value, ties averaged), then average.

    ``values[scheme][j]`` is the metric of ``scheme`` in scenario ``j``.
    Positions order schemes by average rank, ties broken by scheme name.
    """
    schemes = sorted(values)
    mat = np.array([values[s] for s in schemes], dtype=float)
    if mat.ndim != 2 or mat.shape[1] == 0:
        raise ValueError("need at least one scenario per scheme")
    ranks = np.column_stack([rankdata(mat[:, j], method="average") for j in range(mat.shape[1])])
    avg = ranks.mean(axis=1)
    order = sorted(range(len(schemes)), key=lambda i: (avg[i], schemes[i]))
    position = {schemes[i]: p + 1 for p, i in enumerate(order)}
    return [RankEntry(metric, s, float(avg[i]), position[s]) for i, s in enumerate(schemes)]


def friedman_ranks(rows: list[MetricsRow], metrics=RANKED_METRICS) -> list[RankEntry]:
    """Friedman average ranks with cp_MD values as the test scenarios (seeds averaged first)."""
    schemes = sorted({r.scheme for r in rows})
    scenarios = sorted({r.cp_md for r in rows})
    cell = defaultdict(list)
    for r in rows:
        cell[(r.scheme, r.cp_md)].append(r)
    missing = [(s, c) for s in schemes for c in scenarios if (s, c) not in cell]
    if missing:
        raise MissingCellsError(missing)
    out = []
    for m in metrics:
        values = {s: [float(np.mean([getattr(r, m) for r in cell[(s, c)]])) for c in scenarios] for s in schemes}
        out.extend(average_ranks(values, m))
    return out


def format_rank_table(entries: list[RankEntry], scheme_order=None) -> str:
    metrics = list(dict.fromkeys(e.metric for e in entries))
    by = {(e.metric, e.scheme): e for e in entries}
    schemes = scheme_order or sorted({e.scheme for e in entries})
    head = "Algorithm".ljust(10) + "".join(f"{m + ' avg':>12}{'pos':>5}" for m in metrics)
    lines = [head]
    for s in schemes:
        cells = "".join(f"{by[(m, s)].average_rank:>12.4f}{by[(m, s)].position:>5d}" for m in metrics)
        lines.append(s.ljust(10) + cells)
    return "\n".join(lines)
