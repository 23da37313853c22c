"""Training loop for the two cooperating agents, baseline schemes and frozen-policy evaluation.

Random streams are split by purpose so schemes can be compared on the same
tasks: for a run seed ``s`` the topology uses ``[s, 2]``, the training
workload of episode ``k`` uses ``[s, 0, k]``, evaluation workloads use
``[s, 3, k]`` and agent initialisation/exploration uses ``[s, 1]``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import SCHEME_MODES, DdqnAgent, Td3Agent
from .config import ExperimentConfig
from .environments import EiEnvironment, MdEnvironment, StateEncoder, exchange
from .local_exec import MobileDevice
from .neural import load_checkpoint, save_checkpoint
from .topology import build_infrastructure, path_min_bandwidth, shortest_path
from .workload import GHZ, MBPS, Channel, generate_task

log = logging.getLogger(__name__)

TOPOLOGY_STREAM, AGENT_STREAM, TRAIN_STREAM, EVAL_STREAM, EVAL_POLICY_STREAM = 2, 1, 0, 3, 4


@dataclass
class SlotLog:
    episode: int
    slot: int
    x: float
    hosts: tuple[int, ...]
    dl: float
    de: float
    dc: float
    ec: float
    uc: float
    cost: float
    r_o: float
    stage_rewards: tuple[float, ...]
    feasible: bool
    violated: tuple[str, ...]


@dataclass
class EpisodeLog:
    episode: int
    slots: list[SlotLog] = field(default_factory=list)
    phase: str = "train"
    diagnostics: dict = field(default_factory=dict)

    @property
    def cumulative_reward(self):
        return float(sum(s.r_o for s in self.slots))

    @property
    def mean_cost(self):
        return float(np.mean([s.cost for s in self.slots])) if self.slots else math.nan

    @property
    def infeasible_slots(self):
        return sum(not s.feasible for s in self.slots)


def greedy_placement(ei_env: EiEnvironment) -> int:
    """Per-VNF greedy host choice: cheapest processing + path transfer, feasible first, lowest id on ties."""
    task = ei_env._task
    infra = ei_env.infra
    i = ei_env.stage
    f = task.chain.vnfs[i - 1]
    n = task.chain.n
    data_in = task.chain.input_ratios()[i - 1] * ei_env.x * task.input_bits
    prev = ei_env.hosts[-1] if ei_env.hosts else ei_env.access
    proc = data_in * task.cycles_per_bit / (f.compute_demand * GHZ)

    best = None
    for v in range(infra.n_stations):
        path = shortest_path(infra, prev, v)
        delay = proc + sum(data_in / (infra.links[l].bandwidth_available * MBPS) for l in path.link_sequence)
        if i == n:
            back = shortest_path(infra, v, ei_env.access)
            out = f.output_ratio * ei_env.x * task.input_bits
            delay += sum(out / (infra.links[l].bandwidth_available * MBPS) for l in back.link_sequence)
        feasible = infra.stations[v].compute_available >= f.compute_demand
        if i >= 2:
            feasible = feasible and path_min_bandwidth(infra, path) >= task.chain.inter_vnf_bandwidth[i - 2]
        key = (not feasible, delay, v)
        if best is None or key < best:
            best = key
    return best[2]


class Runner:
    """Owns one experiment cell: topology, environments and the scheme's agents."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg.validate()
        run = cfg.run
        self.scheme = run.scheme
        self.seed = run.seed
        self.infra = build_infrastructure(cfg.topology, np.random.default_rng([self.seed, TOPOLOGY_STREAM]))
        self._pristine = self.infra.snapshot()
        self.md = MobileDevice(cfg.device.compute_ghz, cfg.channel.md_tx_power_w,
                               cfg.channel.md_rx_power_w, cfg.device.kappa)
        self.channel = Channel.from_config(cfg.channel)
        self.encoder = StateEncoder(cfg.workload, cfg.device, cfg.topology, len(self.infra.links))
        self.md_env = MdEnvironment(self.md, self.infra, self.encoder, self.channel)
        self.ei_env = EiEnvironment(self.infra, self.md, self.encoder, cfg.cost)
        self.rng = np.random.default_rng([self.seed, AGENT_STREAM])

        self.actor = None
        self.placer = None
        n_bs = self.infra.n_stations
        if self.scheme in SCHEME_MODES:
            mode, dueling, double = SCHEME_MODES[self.scheme]
            self.actor = Td3Agent(self.encoder.md_dim, cfg.td3, self.rng, mode)
            self.placer = DdqnAgent(self.encoder.ei_dim, n_bs, cfg.ddqn, self.rng, dueling, double)
        elif self.scheme == "edge":
            self.placer = DdqnAgent(self.encoder.ei_dim, n_bs, cfg.ddqn, self.rng, dueling=False, double=False)
        self.train_logs: list[EpisodeLog] = []
        self.episodes_done = 0
        self.boundary_violations = 0

    # -- policies ----------------------------------------------------------
    def choose_x(self, state, explore, rng):
        s = self.scheme
        if self.actor is not None:
            return self.actor.select_action(state, explore)
        if s == "local":
            return 0.0
        if s == "edge":
            return 1.0
        if s == "binary":
            return 0.0 if rng.random() < 0.5 else 1.0
        return float(rng.uniform(0.0, 1.0))  # random

    def placement_fn(self, explore, rng):
        if self.placer is not None:
            return lambda st: self.placer.select_action(st.vector, explore)
        if self.scheme == "binary":
            return lambda st: greedy_placement(self.ei_env)
        n = self.infra.n_stations
        return lambda st: int(rng.integers(n))

    # -- episodes ------------------------------------------------------------
    def run_episode(self, episode, workload_rng, learn, explore, policy_rng=None, phase="train"):
        cfg = self.cfg
        T = cfg.run.slots
        policy_rng = self.rng if policy_rng is None else policy_rng
        tasks = [generate_task(cfg.workload, t + 1, workload_rng) for t in range(T)]
        place = self.placement_fn(explore, policy_rng)
        elog = EpisodeLog(episode, phase=phase)
        pending = None  # last-stage EI transition waiting for its successor state
        losses = {"critic": [], "actor": [], "q": []}

        for t, task in enumerate(tasks):
            self.md_env.begin_slot(task)
            s = self.md_env.observe()
            a = self.choose_x(s, explore, policy_rng)
            out = exchange(self.md_env, self.ei_env, a, place, cfg.cost)
            terminal = t == T - 1
            if self.infra.snapshot() != self._pristine:
                self.boundary_violations += 1

            if learn and self.actor is not None:
                s_next = self.md_env.observe(tasks[t + 1]) if not terminal else np.zeros_like(s)
                self.actor.buffer.push(s, a, out.md_reward, s_next, terminal)
            if learn and self.placer is not None and out.transitions:
                buf = self.placer.buffer
                if pending is not None:
                    buf.push(pending.state, pending.action, pending.reward, out.transitions[0].state, False)
                for tr in out.transitions[:-1]:
                    buf.push(tr.state, tr.action, tr.reward, tr.next_state, False)
                pending = out.transitions[-1]

            r = out.result
            elog.slots.append(SlotLog(
                episode, t + 1, out.x, out.hosts, r.local_delay, r.edge_delay, r.execution_delay,
                r.md_energy, r.usage_charge, r.cost, out.md_reward, tuple(out.stage_rewards),
                r.feasibility.all, tuple(r.feasibility.violated())))

            if learn:
                if self.actor is not None:
                    d = self.actor.update()
                    if not d["skipped"]:
                        losses["critic"].append(d["critic1_loss"])
                        if "actor_loss" in d:
                            losses["actor"].append(d["actor_loss"])
                if self.placer is not None:
                    for _ in out.transitions:
                        d = self.placer.update()
                        if not d["skipped"]:
                            losses["q"].append(d["loss"])

        if learn and self.placer is not None and pending is not None:
            self.placer.buffer.push(pending.state, pending.action, pending.reward, pending.state, True)
        elog.diagnostics = {k: float(np.mean(v)) if v else math.nan for k, v in losses.items()}
        if self.placer is not None:
            elog.diagnostics["epsilon"] = self.placer.epsilon
        return elog

    def train(self, episodes=None, checkpoint_dir=None, callback=None):
        episodes = self.cfg.run.episodes if episodes is None else episodes
        learn = self.actor is not None or self.placer is not None
        every = self.cfg.run.checkpoint_every
        for _ in range(episodes):
            k = self.episodes_done
            wrng = np.random.default_rng([self.seed, TRAIN_STREAM, k])
            elog = self.run_episode(k, wrng, learn=learn, explore=True)
            self.train_logs.append(elog)
            self.episodes_done += 1
            if callback is not None:
                callback(elog)
            if checkpoint_dir is not None and every and self.episodes_done % every == 0:
                self.save(Path(checkpoint_dir) / f"checkpoint_ep{self.episodes_done:05d}")
        return self.train_logs

    def evaluate(self, episodes=None, fixed_workload=None):
        """Greedy, noiseless rollouts; never touches agent parameters or buffers."""
        episodes = self.cfg.run.eval_episodes if episodes is None else episodes
        policy_rng = np.random.default_rng([self.seed, EVAL_POLICY_STREAM])
        logs = []
        for k in range(episodes):
            key = k if fixed_workload is None else fixed_workload
            wrng = np.random.default_rng([self.seed, EVAL_STREAM, key])
            logs.append(self.run_episode(k, wrng, learn=False, explore=False, policy_rng=policy_rng,
                                         phase="eval"))
        return logs

    # -- checkpoints -----------------------------------------------------------
    def networks(self):
        nets = {}
        if self.actor is not None:
            nets.update({f"td3/{k}": v for k, v in self.actor.networks().items()})
        if self.placer is not None:
            nets.update({f"ddqn/{k}": v for k, v in self.placer.networks().items()})
        return nets

    def save(self, stem):
        arrays = {name: net.params for name, net in self.networks().items()}
        if self.placer is not None:
            arrays["ddqn/epsilon"] = np.array([self.placer.epsilon])
        arrays["run/episodes_done"] = np.array([float(self.episodes_done)])
        save_checkpoint(stem, arrays)

    def load(self, stem):
        arrays = load_checkpoint(stem)
        for name, net in self.networks().items():
            net.params[:] = arrays[name]
        if self.placer is not None and "ddqn/epsilon" in arrays:
            self.placer.epsilon = float(arrays["ddqn/epsilon"][0])
        self.episodes_done = int(arrays.get("run/episodes_done", [0])[0])


def train_cdadrl(cfg: ExperimentConfig, episodes=None):
    runner = Runner(cfg)
    logs = runner.train(episodes)
    return runner, logs


def run_baseline(cfg: ExperimentConfig, scheme: str, episodes=None):
    from .config import BASELINE_SCHEMES
    if scheme not in BASELINE_SCHEMES:
        raise ValueError(f"{scheme!r} is not a baseline scheme")
    runner = Runner(cfg.replace(**{"run.scheme": scheme}))
    return runner, runner.train(episodes)


def evaluate_policy(runner: Runner, episodes=None, fixed_workload=None):
    return runner.evaluate(episodes, fixed_workload)
