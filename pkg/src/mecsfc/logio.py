"""CSV emission and parsing for episode/slot logs.

Schemas (headers always written, reals at 9 significant digits)::

    episodes.csv  run_id, episode, cumulative_reward, mean_cost, infeasible_slots
    slots.csv     run_id, episode, slot, x, DL, DE, DC, EC, UC, cost, r_o

Training logs go to ``episodes.csv``/``slots.csv``; frozen-policy evaluation
uses the same schemas under ``eval_episodes.csv``/``eval_slots.csv``.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

EPISODE_FIELDS = ("run_id", "episode", "cumulative_reward", "mean_cost", "infeasible_slots")
SLOT_FIELDS = ("run_id", "episode", "slot", "x", "DL", "DE", "DC", "EC", "UC", "cost", "r_o")


def fmt(value):
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        out = f"{value:.9g}"
        return "0" if out == "-0" else out
    return str(value)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def episode_rows(run_id, logs):
    for e in logs:
        yield (run_id, e.episode, e.cumulative_reward, e.mean_cost, e.infeasible_slots)


def slot_rows(run_id, logs):
    for e in logs:
        for s in e.slots:
            yield (run_id, s.episode, s.slot, s.x, s.dl, s.de, s.dc, s.ec, s.uc, s.cost, s.r_o)


def write_logs(directory, run_id, logs, prefix=""):
    directory = Path(directory)
    write_csv(directory / f"{prefix}episodes.csv", EPISODE_FIELDS, episode_rows(run_id, logs))
    write_csv(directory / f"{prefix}slots.csv", SLOT_FIELDS, slot_rows(run_id, logs))
