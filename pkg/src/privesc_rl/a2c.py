"""Episodic advantage actor-critic.

One update per episode: play with the current policy (actions sampled from
the softmax — exploration comes only from that stochasticity), compute
discounted Monte-Carlo returns G_t, use A_t = G_t - V(s_t) as constant
advantages, and take a single Adam step on the summed per-step loss

    sum_t [ -log pi(a_t | s_t) * A_t
            + w_v * Huber(V(s_t), G_t)
            - w_e * H(pi(. | s_t)) ]

Training is single-threaded and bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import csv
import sys
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .config import RunConfig
from .net import NetOutput, backward_net, forward_net, init_net, sample_action
from .nn import AdamState, ParamStore, adam_step, huber, save_params
from .state import EncodedState, encode, init_state, update as update_state
from .winsim import EscalationEnv, reset

METRICS_HEADER = ("episode", "length", "reward", "avg100_length", "avg100_reward")


@dataclass
class EpisodeBuffer:
    encodings: list[EncodedState] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    log_probs: list[float] = field(default_factory=list)

    def append(self, enc: EncodedState, action: int, reward: float,
               value: float, log_prob: float) -> None:
        self.encodings.append(enc)
        self.actions.append(action)
        self.rewards.append(reward)
        self.values.append(value)
        self.log_probs.append(log_prob)

    def __len__(self) -> int:
        return len(self.actions)


def rollout(env: EscalationEnv, params: ParamStore, run_cfg: RunConfig,
            rng: np.random.Generator,
            action_fn: Optional[Callable[[NetOutput, np.random.Generator], int]] = None,
            ) -> EpisodeBuffer:
    """Play one full episode, sampling from the policy."""
    pick = action_fn if action_fn is not None else sample_action
    state = init_state()
    buf = EpisodeBuffer()
    while not env.done:
        enc = encode(state)
        out, _ = forward_net(params, run_cfg.net, enc)
        a = pick(out, rng)
        res = env.step(a)
        update_state(state, a, res.facts)
        buf.append(enc, a, res.reward, out.value, float(np.log(out.policy[a - 1])))
    return buf


def compute_returns(rewards: list[float] | np.ndarray, gamma: float) -> np.ndarray:
    """Discounted reward-to-go G_t for every step of one episode."""
    out = np.zeros(len(rewards), dtype=np.float64)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def compute_advantages(returns: np.ndarray, values: list[float] | np.ndarray) -> np.ndarray:
    """A_t = G_t - V(s_t); treated as constants in the update."""
    return np.asarray(returns, dtype=np.float64) - np.asarray(values, dtype=np.float64)


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float


def update(params: ParamStore, run_cfg: RunConfig, buf: EpisodeBuffer,
           adam: AdamState) -> UpdateStats:
    """One Adam step on the summed per-step loss of a finished episode."""
    tc = run_cfg.train
    returns = compute_returns(buf.rewards, tc.gamma)
    advantages = compute_advantages(returns, buf.values)

    total = params.zero_grads()
    policy_loss = 0.0
    value_loss = 0.0
    entropy_sum = 0.0

    for t in range(len(buf)):
        out, cache = forward_net(params, run_cfg.net, buf.encodings[t])
        pi = out.policy
        a_idx = buf.actions[t] - 1
        adv = float(advantages[t])

        # d/dz of -adv * log pi[a]
        d_logits = adv * pi.copy()
        d_logits[a_idx] -= adv
        policy_loss += -adv * float(np.log(pi[a_idx]))

        with np.errstate(divide="ignore", invalid="ignore"):
            log_pi = np.where(pi > 0.0, np.log(pi), 0.0)
        ent = float(-(pi * log_pi).sum())
        entropy_sum += ent
        if tc.entropy_weight != 0.0:
            # d/dz of -w_e * H
            d_logits += tc.entropy_weight * pi * (log_pi + ent)

        l_val, dv = huber(out.value, float(returns[t]))
        value_loss += tc.value_loss_weight * l_val
        dv *= tc.value_loss_weight

        grads = backward_net(params, run_cfg.net, cache, d_logits, dv)
        for k, g in grads.items():
            total[k] += g

    adam_step(params, total, adam, lr=tc.lr, beta1=tc.adam_beta1,
              beta2=tc.adam_beta2, eps=tc.adam_eps)
    n = max(1, len(buf))
    return UpdateStats(policy_loss, value_loss, entropy_sum / n)


class Metrics:
    """Per-episode log with moving averages over a fixed window."""

    def __init__(self, window: int = 100):
        self.window = window
        self.rows: list[tuple] = []
        self._lens: deque = deque(maxlen=window)
        self._rews: deque = deque(maxlen=window)

    def push(self, episode: int, length: int, reward: float) -> tuple:
        self._lens.append(length)
        self._rews.append(reward)
        row = (
            episode,
            length,
            reward,
            sum(self._lens) / len(self._lens),
            sum(self._rews) / len(self._rews),
        )
        self.rows.append(row)
        return row

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(METRICS_HEADER)
            w.writerows(self.rows)


@dataclass
class TrainResult:
    params: ParamStore
    adam: AdamState
    metrics: Metrics
    run_cfg: RunConfig
    episodes: int
    wall_seconds: float


def train(run_cfg: RunConfig, out_dir: Optional[str | Path] = None,
          episodes: Optional[int] = None, verbose: bool = True,
          params: Optional[ParamStore] = None) -> TrainResult:
    """Full training loop: fresh host per episode, one update per episode.

    With ``out_dir`` set, writes ``metrics.csv`` and periodic + final
    checkpoints (``checkpoint.bin``), each embedding the run config.
    """
    tc = run_cfg.train
    n_episodes = episodes if episodes is not None else tc.episodes
    ss = np.random.SeedSequence(tc.seed)
    init_ss, sample_ss, env_ss = ss.spawn(3)
    if params is None:
        params = init_net(run_cfg.net, np.random.default_rng(init_ss))
    sample_rng = np.random.default_rng(sample_ss)
    env_rng = np.random.default_rng(env_ss)
    adam = AdamState.for_params(params)
    metrics = Metrics(tc.metrics_window)
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    t0 = time.monotonic()
    for ep in range(1, n_episodes + 1):
        env_seed = int(env_rng.integers(0, 2**63 - 1))
        env = reset(env_seed, run_cfg.env)
        buf = rollout(env, params, run_cfg, sample_rng)
        update(params, run_cfg, buf, adam)
        row = metrics.push(ep, len(buf), buf.rewards[-1] if buf.rewards else 0.0)

        if out_path is not None and (ep % tc.checkpoint_every == 0 or ep == n_episodes):
            _save(out_path, params, run_cfg, ep)
            metrics.write_csv(out_path / "metrics.csv")
        if verbose and (ep % tc.log_every == 0 or ep == n_episodes):
            print(
                f"episode {ep}/{n_episodes}  len={row[1]}  "
                f"avg{tc.metrics_window}_len={row[3]:.1f}  "
                f"avg{tc.metrics_window}_reward={row[4]:.3f}",
                file=sys.stderr,
            )

    wall = time.monotonic() - t0
    if out_path is not None:
        _save(out_path, params, run_cfg, n_episodes)
        metrics.write_csv(out_path / "metrics.csv")
    return TrainResult(params, adam, metrics, run_cfg, n_episodes, wall)


def _save(out_path: Path, params: ParamStore, run_cfg: RunConfig, episode: int) -> None:
    save_params(
        str(out_path / "checkpoint.bin"),
        params,
        {"run": run_cfg.to_dict(), "episode": episode},
    )
