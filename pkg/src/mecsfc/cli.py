"""mecsfc command line: train / sweep / eval / report.

    mecsfc train  --scheme cdadrl --seed 3 --cp-md 1.0 --episodes 300 --out runs/
    mecsfc sweep  --config grid.ini --out runs/ --workers 4
    mecsfc eval   --out runs/cdadrl_cp1_s3 --episodes 10
    mecsfc report --out runs/

Every cell lands in ``<out>/<scheme>_cp<cp>_s<seed>/`` with run.json,
config.ini, topology.json, episodes.csv, slots.csv, eval_episodes.csv,
eval_slots.csv and (learned schemes) a checkpoint pair.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from ._kernels import BACKEND
from .config import SCHEMES, ExperimentConfig
from .errors import MecsfcError
from .logio import SLOT_FIELDS, read_csv, write_csv, write_logs
from .metrics import (METRIC_FIELDS, RANK_FIELDS, CellLogs, compute_metrics, format_rank_table,
                      friedman_ranks)
from .orchestrator import Runner

log = logging.getLogger("mecsfc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def run_id(scheme, cp_md, seed):
    return f"{scheme}_cp{cp_md:g}_s{seed}"


def run_cell(cfg: ExperimentConfig, out_root) -> Path:
    """Train, evaluate and write one (scheme, cp_MD, seed) cell. Returns its directory."""
    cfg = cfg.validate()
    rid = run_id(cfg.run.scheme, cfg.device.compute_ghz, cfg.run.seed)
    out = Path(out_root) / rid
    out.mkdir(parents=True, exist_ok=True)
    meta = {"run_id": rid, "scheme": cfg.run.scheme, "cp_md": cfg.device.compute_ghz,
            "seed": cfg.run.seed, "episodes": cfg.run.episodes, "slots": cfg.run.slots,
            "eval_episodes": cfg.run.eval_episodes, "backend": BACKEND, "complete": False}
    _write_json(out / "run.json", meta)
    cfgmod.dump(cfg, out / "config.ini")

    runner = Runner(cfg)
    (out / "topology.json").write_text(runner.infra.dumps(), encoding="utf-8")
    logs = runner.train(checkpoint_dir=out if cfg.run.checkpoint_every else None)
    write_logs(out, rid, logs)
    if runner.networks():
        runner.save(out / "checkpoint")
    write_logs(out, rid, runner.evaluate(), prefix="eval_")
    meta["complete"] = True
    _write_json(out / "run.json", meta)
    log.info("%s: final-30 mean reward %.3f", rid, np.mean([e.cumulative_reward for e in logs[-30:]]))
    return out


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _run_cell_job(args):
    text, out_root = args
    return str(run_cell(cfgmod.loads(text), out_root))


def _base_config(ns) -> ExperimentConfig:
    cfg = cfgmod.load(ns.config) if ns.config else ExperimentConfig()
    if ns.episodes is not None:
        cfg = cfg.replace(**{"run.episodes": ns.episodes})
    return cfg


# -- subcommands --------------------------------------------------------------

def cmd_train(ns):
    cfg = _base_config(ns)
    over = {}
    if ns.scheme:
        over["run.scheme"] = ns.scheme
    if ns.seed is not None:
        over["run.seed"] = ns.seed
    if ns.cp_md is not None:
        over["device.compute_ghz"] = ns.cp_md
    out = run_cell(cfg.replace(**over), ns.out)
    print(out)
    return 0


def cmd_sweep(ns):
    cfg = _base_config(ns)
    schemes = ns.scheme or list(cfg.run.schemes)
    cps = ns.cp_md or list(cfg.run.cp_md_sweep)
    seeds = ns.seed or list(cfg.run.seeds)
    workers = ns.workers or cfg.run.workers
    jobs = []
    for s in schemes:
        for cp in cps:
            for seed in seeds:
                cell = cfg.replace(**{"run.scheme": s, "run.seed": seed, "device.compute_ghz": cp}).validate()
                jobs.append((cfgmod.dumps(cell), str(ns.out)))
    if workers <= 1:
        done = [_run_cell_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_run_cell_job, jobs))
    for d in done:
        print(d)
    return 0


def cmd_eval(ns):
    run_dir = Path(ns.out)
    cfg = cfgmod.load(run_dir / "config.ini")
    runner = Runner(cfg)
    stem = run_dir / "checkpoint"
    if runner.networks():
        if not stem.with_suffix(".bin").exists():
            raise MecsfcError(f"no checkpoint in {run_dir}")
        runner.load(stem)
    logs = runner.evaluate(ns.episodes)
    rid = json.loads((run_dir / "run.json").read_text())["run_id"]
    write_logs(run_dir, rid, logs, prefix="eval_")
    rewards = [e.cumulative_reward for e in logs]
    print(f"{rid}: {len(logs)} eval episodes, mean cumulative reward {np.mean(rewards):.6g}")
    return 0


def load_cells(root) -> tuple[list[CellLogs], list[tuple]]:
    cells, curves = [], []
    for meta_path in sorted(Path(root).rglob("run.json")):
        d = meta_path.parent
        meta = json.loads(meta_path.read_text())
        ep = read_csv(d / "episodes.csv") if (d / "episodes.csv").exists() else []
        ev = read_csv(d / "eval_episodes.csv") if (d / "eval_episodes.csv").exists() else []
        slots_file = d / "eval_slots.csv"
        slots = read_csv(slots_file) if slots_file.exists() else []
        if not slots and (d / "slots.csv").exists():
            log.warning("%s: no evaluation slots, metrics use training slots", meta["run_id"])
            slots = read_csv(d / "slots.csv")
        col = {k: [float(r[k]) for r in slots] for k in ("DC", "EC", "UC", "cost")}
        train_r = [float(r["cumulative_reward"]) for r in ep]
        eval_r = [float(r["cumulative_reward"]) for r in ev]
        cells.append(CellLogs(meta["scheme"], float(meta["cp_md"]), int(meta["seed"]), train_r, eval_r,
                              col["DC"], col["EC"], col["UC"], col["cost"], bool(meta.get("complete"))))
        for phase, rows in (("train", ep), ("eval", ev)):
            for r in rows:
                curves.append((meta["run_id"], meta["scheme"], float(meta["cp_md"]), int(meta["seed"]), phase,
                               int(r["episode"]), float(r["cumulative_reward"])))
    return cells, curves


def report(root, out=None):
    """metrics.csv, ranks.csv, reward_curves.csv and bars.csv from the log files under ``root``."""
    out = Path(out or root)
    cells, curves = load_cells(root)
    rows = compute_metrics(cells)
    write_csv(out / "metrics.csv", METRIC_FIELDS, ([getattr(r, f) for f in METRIC_FIELDS] for r in rows))
    write_csv(out / "reward_curves.csv",
              ("run_id", "scheme", "cp_md", "seed", "phase", "episode", "cumulative_reward"), curves)
    groups = defaultdict(list)
    for r in rows:
        groups[(r.scheme, r.cp_md)].append(r)
    bar_fields = ("AED", "AEC", "AUC", "NAC", "mean_cumulative_reward", "average_episodic_reward")
    write_csv(out / "bars.csv", ("scheme", "cp_md", "n_seeds") + bar_fields,
              ((s, cp, len(g), *[float(np.mean([getattr(r, f) for r in g])) for f in bar_fields])
               for (s, cp), g in sorted(groups.items())))
    ranks = friedman_ranks(rows)
    write_csv(out / "ranks.csv", RANK_FIELDS,
              ((e.metric, e.scheme, f"{e.average_rank:.4f}", e.position) for e in ranks))
    return rows, ranks


def cmd_report(ns):
    _, ranks = report(ns.out)
    print(format_rank_table(ranks))
    return 0


def build_parser():
    p = _Parser(prog="mecsfc", description="Partial offloading + SFC placement experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train and evaluate one cell")
    t.add_argument("--config")
    t.add_argument("--scheme", choices=SCHEMES)
    t.add_argument("--seed", type=int)
    t.add_argument("--episodes", type=int)
    t.add_argument("--cp-md", type=float, dest="cp_md")
    t.add_argument("--out", default="runs")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="grid over schemes x cp_MD x seeds")
    s.add_argument("--config")
    s.add_argument("--scheme", choices=SCHEMES, action="append", help="repeatable; default run.schemes")
    s.add_argument("--seed", type=int, action="append", help="repeatable; default run.seeds")
    s.add_argument("--episodes", type=int)
    s.add_argument("--cp-md", type=float, dest="cp_md", action="append", help="repeatable; default run.cp_md_sweep")
    s.add_argument("--workers", type=int)
    s.add_argument("--out", default="runs")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("eval", help="re-evaluate a trained cell with the frozen policy")
    e.add_argument("--out", required=True, help="cell directory")
    e.add_argument("--episodes", type=int)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("report", help="metrics, Friedman ranks and plot data from a sweep")
    r.add_argument("--out", required=True, help="sweep root")
    r.set_defaults(func=cmd_report)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except (MecsfcError, ValueError, OSError, KeyError) as exc:
        print(f"mecsfc: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())
