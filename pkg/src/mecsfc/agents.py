"""TD3 task-partition agent, (dueling) DDQN placement agent and replay storage.

Ablations are mode flags rather than separate classes: ``Td3Agent(mode="ddpg")``
drops the twin critic, target smoothing and policy delay; ``DdqnAgent`` takes
``dueling`` and ``double`` switches.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DdqnConfig, Td3Config
from .errors import UsageError
from .neural import DenseNet, OptimizerState, adam_step, backward_and_step, hard_update, soft_update


class ReplayBuffer:
    """Fixed-capacity ring of (s, a, r, s', done) rows."""

    def __init__(self, capacity, state_dim, action_dtype=np.float64):
        self.capacity = int(capacity)
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=action_dtype)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.size = 0
        self._next = 0
        self.pushed = 0

    def __len__(self):
        return self.size

    def push(self, state, action, reward, next_state, done):
        k = self._next
        self.states[k] = state
        self.actions[k] = action
        self.rewards[k] = reward
        self.next_states[k] = next_state
        self.dones[k] = float(done)
        self._next = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.pushed += 1

    def indices_in_order(self):
        """Storage indices from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def sample(self, batch_size, rng):
        if batch_size > self.size:
            raise UsageError(f"cannot sample {batch_size} from {self.size} transitions")
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx],
                     self.next_states[idx], self.dones[idx], idx)


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    indices: np.ndarray | None = None

    def __len__(self):
        return len(self.rewards)


def buffer_push(buffer: ReplayBuffer, transition):
    buffer.push(*transition)


def buffer_sample(buffer: ReplayBuffer, batch_size, rng):
    return buffer.sample(batch_size, rng)


# ----------------------------------------------------------------------
# TD3 / DDPG
# ----------------------------------------------------------------------

class Td3Agent:
    def __init__(self, state_dim, cfg: Td3Config | None = None, rng=None, mode="td3"):
        if mode not in ("td3", "ddpg"):
            raise ValueError(f"unknown actor-critic mode {mode!r}")
        self.cfg = cfg or Td3Config()
        self.rng = rng if rng is not None else np.random.default_rng()
        self.mode = mode
        self.state_dim = state_dim
        c = self.cfg
        self.actor = DenseNet(state_dim, 1, "sigmoid", c.hidden, c.depth, self.rng)
        n_critics = 2 if mode == "td3" else 1
        self.critics = [DenseNet(state_dim + 1, 1, "linear", c.hidden, c.depth, self.rng) for _ in range(n_critics)]
        self.actor_target = self.actor.clone()
        self.critic_targets = [q.clone() for q in self.critics]
        self.actor_opt = OptimizerState.for_net(self.actor, c.lr)
        self.critic_opts = [OptimizerState.for_net(q, c.lr) for q in self.critics]
        self.buffer = ReplayBuffer(c.buffer_size, state_dim)
        self.updates = 0

    # TD3 components that DDPG mode switches off
    @property
    def sigma(self):
        return self.cfg.sigma

    @property
    def target_sigma(self):
        return self.cfg.target_sigma if self.mode == "td3" else 0.0

    @property
    def noise_clip(self):
        return self.cfg.noise_clip if self.mode == "td3" else 0.0

    @property
    def policy_delay(self):
        return self.cfg.policy_delay if self.mode == "td3" else 1

    def networks(self):
        nets = {"actor": self.actor, "actor_target": self.actor_target}
        for i, (q, qt) in enumerate(zip(self.critics, self.critic_targets), start=1):
            nets[f"critic{i}"] = q
            nets[f"critic{i}_target"] = qt
        return nets

    def select_action(self, state, explore=True):
        a = float(self.actor.forward(state, cache=False)[0])
        if explore and self.sigma > 0:
            a += self.rng.normal(0.0, self.sigma)
        return float(np.clip(a, 0.0, 1.0))

    def smoothed_target_actions(self, next_states, noise=None):
        a = self.actor_target.forward(next_states, cache=False)[:, 0]
        if noise is None:
            noise = (self.rng.normal(0.0, self.target_sigma, len(a)) if self.target_sigma > 0
                     else np.zeros(len(a)))
        noise = np.clip(noise, -self.noise_clip, self.noise_clip)
        return np.clip(a + noise, 0.0, 1.0)

    def target_values(self, batch: Batch, gamma=None, noise=None):
        gamma = self.cfg.gamma if gamma is None else gamma
        a_next = self.smoothed_target_actions(batch.next_states, noise)
        sa = np.column_stack([batch.next_states, a_next])
        q_next = np.min([qt.forward(sa, cache=False)[:, 0] for qt in self.critic_targets], axis=0)
        return batch.rewards + gamma * (1.0 - batch.dones) * q_next

    def update(self, batch_size=None, gamma=None):
        c = self.cfg
        batch_size = c.batch_size if batch_size is None else batch_size
        if len(self.buffer) < batch_size:
            return {"skipped": True}
        batch = self.buffer.sample(batch_size, self.rng)
        return self.update_on_batch(batch, gamma)

    def update_on_batch(self, batch: Batch, gamma=None, freeze_targets=False):
        B = len(batch)
        y = self.target_values(batch, gamma)
        sa = np.column_stack([batch.states, batch.actions])
        diag = {"skipped": False}
        for i, (q, opt) in enumerate(zip(self.critics, self.critic_opts), start=1):
            pred = q.forward(sa)[:, 0]
            err = pred - y
            diag[f"critic{i}_loss"] = float(np.mean(err ** 2))
            backward_and_step(q, opt, (2.0 / B) * err[:, None])
        self.updates += 1
        if self.updates % self.policy_delay == 0:
            a = self.actor.forward(batch.states)
            q1 = self.critics[0]
            qsa = q1.forward(np.column_stack([batch.states, a]))
            diag["actor_loss"] = float(-qsa.mean())
            # d(-mean Q)/d(input); the last input column is the action
            _, grad_in = q1.backward(np.full((B, 1), -1.0 / B))
            q1._cache = None
            grads, _ = self.actor.backward(grad_in[:, -1:])
            adam_step(self.actor, self.actor_opt, grads)
            if not freeze_targets:
                soft_update(self.actor_target, self.actor, self.cfg.tau)
                for qt, q in zip(self.critic_targets, self.critics):
                    soft_update(qt, q, self.cfg.tau)
            diag["policy_updated"] = True
        else:
            diag["policy_updated"] = False
        return diag


def td3_select_action(agent: Td3Agent, state, explore=True):
    return agent.select_action(state, explore)


def td3_target(agent: Td3Agent, batch: Batch, gamma=None, noise=None):
    return agent.target_values(batch, gamma, noise)


def td3_update(agent: Td3Agent, batch_size=None, gamma=None):
    return agent.update(batch_size, gamma)


# ----------------------------------------------------------------------
# DDQN family
# ----------------------------------------------------------------------

class DdqnAgent:
    def __init__(self, state_dim, n_actions, cfg: DdqnConfig | None = None, rng=None,
                 dueling=True, double=True):
        self.cfg = cfg or DdqnConfig()
        self.rng = rng if rng is not None else np.random.default_rng()
        self.dueling = dueling
        self.double = double
        self.n_actions = n_actions
        self.state_dim = state_dim
        c = self.cfg
        head = "dueling" if dueling else "linear"
        self.q = DenseNet(state_dim, n_actions, head, c.hidden, c.depth, self.rng)
        self.q_target = self.q.clone()
        self.opt = OptimizerState.for_net(self.q, c.lr)
        self.buffer = ReplayBuffer(c.buffer_size, state_dim, action_dtype=np.int64)
        self.epsilon = c.eps_start
        self.selections = 0
        self.updates = 0

    def networks(self):
        return {"q": self.q, "q_target": self.q_target}

    def q_values(self, state):
        return self.q.forward(state, cache=False)

    def select_action(self, state, explore=True):
        if explore:
            eps = self.epsilon
            self.selections += 1
            self.epsilon = max(self.cfg.eps_min, self.epsilon * self.cfg.eps_decay)
            if eps > 0 and self.rng.random() < eps:
                return int(self.rng.integers(self.n_actions))
        return int(np.argmax(self.q_values(state)))

    def target_values(self, batch: Batch, gamma=None):
        gamma = self.cfg.gamma if gamma is None else gamma
        q_next_target = self.q_target.forward(batch.next_states, cache=False)
        if self.double:
            best = np.argmax(self.q.forward(batch.next_states, cache=False), axis=1)
            boot = q_next_target[np.arange(len(best)), best]
        else:
            boot = q_next_target.max(axis=1)
        return batch.rewards + gamma * (1.0 - batch.dones) * boot

    def loss_gradient(self, batch: Batch, y):
        """MSE loss and its gradient w.r.t. the Q outputs (non-chosen actions get 0)."""
        B = len(batch)
        q = self.q.forward(batch.states)
        rows = np.arange(B)
        acts = batch.actions.astype(np.int64)
        err = q[rows, acts] - y
        g = np.zeros_like(q)
        g[rows, acts] = (2.0 / B) * err
        return float(np.mean(err ** 2)), g

    def update(self, batch_size=None, gamma=None):
        batch_size = self.cfg.batch_size if batch_size is None else batch_size
        if len(self.buffer) < batch_size:
            return {"skipped": True}
        batch = self.buffer.sample(batch_size, self.rng)
        return self.update_on_batch(batch, gamma)

    def update_on_batch(self, batch: Batch, gamma=None, freeze_target=False):
        y = self.target_values(batch, gamma)
        loss, g = self.loss_gradient(batch, y)
        backward_and_step(self.q, self.opt, g)
        self.updates += 1
        synced = False
        if not freeze_target and self.updates % self.cfg.sync_period == 0:
            hard_update(self.q_target, self.q)
            synced = True
        return {"skipped": False, "loss": loss, "synced": synced}


def ddqn_select_action(agent: DdqnAgent, state, explore=True):
    return agent.select_action(state, explore)


def ddqn_target(agent: DdqnAgent, batch: Batch, gamma=None):
    return agent.target_values(batch, gamma)


def ddqn_update(agent: DdqnAgent, batch_size=None, gamma=None):
    return agent.update(batch_size, gamma)


SCHEME_MODES = {
    # scheme: (actor-critic mode, dueling, double)
    "cdadrl": ("td3", True, True),
    "td3-ddqn": ("td3", False, True),
    "ddpg-duel": ("ddpg", True, True),
    "ddpg-ddqn": ("ddpg", False, True),
}
