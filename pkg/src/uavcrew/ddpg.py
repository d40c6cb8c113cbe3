"""Centralized DDPG over the fixed-width crew encoding, trained by a host
process fed from parallel environment workers (APC)."""
from __future__ import annotations

import json
import math
import multiprocessing as mp
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import numpy as np

from .nn import Adam, BufferNotReady, Mlp, ReplayBuffer, Transition, load_checkpoint, save_checkpoint, soft_update
from .status import Status
from .world import (ConfigError, Scenario, WorldState, active_set, advance_slot, init_world, sample_users,
                    served, trace_record)

TRACE_SCHEMA = 1


@dataclass
class DdpgConfig:
    hidden: list[int] = field(default_factory=lambda: [64, 64])
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    gamma: float = 0.99
    tau: float = 0.005
    batch: int = 64
    buffer: int = 100_000
    warmup: int = 64  # transitions stored before the first train step
    sigma_start: float = 0.3
    sigma_end: float = 0.05
    sigma_decay: float = 0.6  # fraction of episodes over which sigma decays
    beta: float = 0.5  # out-of-bound penalty weight
    preact_penalty: float = 0.0  # L2 weight on the actor's pre-tanh output; keeps it out of saturation
    event_boost: bool = False
    boost_factor: float = 2.0
    boost_window: int = 5
    refresh: str = "episode"  # workers pull the policy per "episode" or per "step"


# --- crew environment -------------------------------------------------------------

def encode_state(world: WorldState) -> np.ndarray:
    """(x/W, y/H, battery/B_max, countdown/T) per UAV id, then slot/T.

    An AWAY UAV with no pending join is masked to zeros, so a quit shows up
    in the state and not only in the reward."""
    T = world.clock.slots
    b_max = world.scenario.energy.b_max
    out = np.zeros(4 * len(world.uavs) + 1)
    for u in world.uavs:
        if u.status is Status.AWAY and u.join_countdown == 0:
            continue
        k = 4 * u.id
        out[k] = u.position[0] / world.region.width
        out[k + 1] = u.position[1] / world.region.height
        out[k + 2] = u.battery / b_max
        out[k + 3] = min(1.0, u.join_countdown / T)
    out[-1] = min(1.0, world.clock.slot_index / T)
    return out


def decode_action(action, world: WorldState) -> np.ndarray:
    a = np.clip(np.asarray(action, dtype=float).reshape(len(world.uavs), 2), -1.0, 1.0)
    return a * world.scenario.world.d_max


def reward(served_count: int, total_users: int, oob_flags, n_active: int, beta: float = 0.5) -> float:
    service = served_count / total_users if total_users > 0 else 0.0
    return service - beta * sum(bool(f) for f in oob_flags) / max(1, n_active)


class StepResult(NamedTuple):
    obs: np.ndarray
    reward: float
    done: bool
    info: dict


class CrewEnv:
    """Positioning task: one global action moves every serving UAV."""

    def __init__(self, scenario: Scenario, beta: float = 0.5):
        self.scenario = scenario
        self.beta = beta
        n = scenario.world.n_max
        self.state_dim = 4 * n + 1
        self.action_dim = 2 * n
        self.world: Optional[WorldState] = None
        self.event_slots = tuple(e.slot for e in scenario.world.events if e.slot is not None)

    @property
    def slot(self) -> int:
        return self.world.clock.slot_index

    def reset(self, seed: int) -> np.ndarray:
        self.world = init_world(self.scenario, seed)
        return encode_state(self.world)

    def step(self, action) -> StepResult:
        before = self.world
        n_active = len(active_set(before).active)
        after = advance_slot(before, decode_action(action, before))
        users = sample_users(after)
        sc = served(after, users)
        oob = [f for u, f in zip(before.uavs, after.last_step.out_of_bound) if u.id in active_set(before).active]
        r = reward(sc.total, len(users), oob, n_active, self.beta)
        self.world = after
        done = after.clock.slot_index >= after.clock.slots
        info = {"served": sc.total, "users": len(users), "fired": after.last_step.fired}
        return StepResult(encode_state(after), r, done, info)

    def trace(self, served_count: int) -> dict:
        return trace_record(self.world, served_count)


@dataclass
class CrewTask:
    """Picklable recipe for a CrewEnv copy."""
    scenario: Scenario
    beta: float = 0.5

    def make(self) -> CrewEnv:
        return CrewEnv(self.scenario, self.beta)


# --- agent -----------------------------------------------------------------------

class TrainStats(NamedTuple):
    critic_loss: float
    actor_objective: float


class DdpgAgent:
    def __init__(self, state_dim: int, action_dim: int, cfg: DdpgConfig = None, seed: int = 0):
        self.cfg = cfg or DdpgConfig()
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.seed = int(seed)
        ss = np.random.SeedSequence(self.seed)
        actor_seed, critic_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
        hidden = list(self.cfg.hidden)
        self.actor = Mlp([state_dim, *hidden, action_dim], "tanh", seed=actor_seed, final_scale=3e-3)
        self.critic = Mlp([state_dim + action_dim, *hidden, 1], "identity", seed=critic_seed, final_scale=3e-3)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = Adam(self.actor.params, lr=self.cfg.actor_lr)
        self.critic_opt = Adam(self.critic.params, lr=self.cfg.critic_lr)
        self.train_steps = 0

    def critic_targets(self, batch) -> np.ndarray:
        next_actions = self.target_actor.forward(batch.next_states)
        q_next = self.target_critic.forward(np.hstack([batch.next_states, next_actions]))[:, 0]
        return batch.rewards + self.cfg.gamma * (1.0 - batch.terminals) * q_next

    def train_step(self, buf: ReplayBuffer, rng: np.random.Generator) -> TrainStats:
        batch = buf.sample(self.cfg.batch, rng)
        n = len(batch.rewards)
        y = self.critic_targets(batch)

        sa = np.hstack([batch.states, batch.actions])
        q = self.critic.forward(sa)[:, 0]
        err = q - y
        grads = self.critic.backward(sa, (2.0 / n * err)[:, None])
        self.critic_opt.step(self.critic.params, grads.params)

        mu = self.actor.forward(batch.states)
        s_mu = np.hstack([batch.states, mu])
        q_mu = self.critic.forward(s_mu)
        dq = self.critic.backward(s_mu, np.full_like(q_mu, 1.0 / n)).input[:, self.state_dim:]
        pre = None
        if self.cfg.preact_penalty > 0:
            pre = 2.0 * self.cfg.preact_penalty / n * self.actor.preactivation(batch.states)
        actor_grads = self.actor.backward(batch.states, -dq, pre)
        self.actor_opt.step(self.actor.params, actor_grads.params)

        soft_update(self.target_critic, self.critic, self.cfg.tau)
        soft_update(self.target_actor, self.actor, self.cfg.tau)
        self.train_steps += 1
        return TrainStats(float(np.mean(err * err)), float(np.mean(q_mu)))

    def nets(self) -> dict:
        return {"actor": self.actor, "critic": self.critic,
                "target_actor": self.target_actor, "target_critic": self.target_critic}

    def save(self, path, meta: Optional[dict] = None) -> None:
        info = {"kind": "ddpg", "seed": self.seed, "train_steps": self.train_steps,
                "actor_opt_steps": self.actor_opt.t, "critic_opt_steps": self.critic_opt.t,
                "state_dim": self.state_dim, "action_dim": self.action_dim}
        info.update(meta or {})
        save_checkpoint(path, self.nets(), info)

    @classmethod
    def load(cls, path, cfg: DdpgConfig = None) -> "DdpgAgent":
        nets, meta = load_checkpoint(path)
        if meta.get("kind") != "ddpg":
            raise ConfigError(f"checkpoint {path} holds a {meta.get('kind')!r} agent, not ddpg")
        agent = cls(meta["state_dim"], meta["action_dim"], cfg, seed=meta["seed"])
        for name, net in nets.items():
            setattr(agent, name, net)
        agent.train_steps = meta["train_steps"]
        return agent


def act(actor: Mlp, obs, explore: bool, rng: Optional[np.random.Generator], sigma: float) -> np.ndarray:
    a = actor.forward(obs)
    if explore and sigma > 0:
        a = a + rng.normal(0.0, sigma, size=a.shape)
    return np.clip(a, -1.0, 1.0)


def sigma_schedule(cfg: DdpgConfig, episode: int, episodes: int) -> float:
    horizon = max(1.0, cfg.sigma_decay * episodes)
    frac = min(1.0, episode / horizon)
    return cfg.sigma_start + (cfg.sigma_end - cfg.sigma_start) * frac


def _boosted(cfg: DdpgConfig, env, sigma: float) -> float:
    if not cfg.event_boost:
        return sigma
    slots = getattr(env, "event_slots", ())
    if any(abs(env.slot - s) <= cfg.boost_window for s in slots):
        return sigma * cfg.boost_factor
    return sigma


# --- APC harness ------------------------------------------------------------------

@dataclass
class ApcHarness:
    agent: DdpgAgent
    tasks: list  # one env recipe per worker; identical up to seeds
    seed: int = 0
    buffer: Optional[ReplayBuffer] = None
    snapshot_seq: int = 0

    def __post_init__(self):
        if len(self.tasks) < 1:
            raise ConfigError("APC needs at least one worker")
        first = self.tasks[0]
        for i, t in enumerate(self.tasks[1:], start=1):
            if t != first:
                raise ConfigError(f"worker {i} environment config differs from worker 0")
        if self.buffer is None:
            cfg = self.agent.cfg
            self.buffer = ReplayBuffer(cfg.buffer, self.agent.state_dim, self.agent.action_dim)
        streams = np.random.SeedSequence(self.seed).spawn(len(self.tasks) + 1)
        self.host_rng = np.random.default_rng(streams[0])
        self.worker_rngs = [np.random.default_rng(s) for s in streams[1:]]

    @property
    def workers(self) -> int:
        return len(self.tasks)

    @classmethod
    def build(cls, task, workers: int, agent: DdpgAgent, seed: int = 0) -> "ApcHarness":
        return cls(agent, [task] * workers, seed)


class ApcResult(NamedTuple):
    agent: DdpgAgent
    curve: list
    collected: int
    train_steps: int


def apc_run(h: ApcHarness, episodes: int, wall_budget: Optional[float] = None) -> ApcResult:
    """Train ``h.agent`` over ``episodes`` worker episodes (fewer if the wall
    budget in seconds runs out). One worker runs in-process and is fully
    deterministic; more workers run as separate processes."""
    deadline = None if wall_budget is None else time.perf_counter() + wall_budget
    if h.workers == 1:
        return _run_inline(h, episodes, deadline)
    return _run_parallel(h, episodes, deadline)


def _next_job(h: ApcHarness, worker: int, episode: int, episodes: int):
    rng = h.worker_rngs[worker]
    env_seed = int(rng.integers(0, 2**31 - 1))
    noise_seed = int(rng.integers(0, 2**31 - 1))
    return episode, env_seed, noise_seed, sigma_schedule(h.agent.cfg, episode, episodes)


def _curve_row(episode, worker, env_seed, ret, steps, losses, sigma, collected):
    return {"episode": episode, "worker": worker, "env_seed": env_seed, "return": ret, "steps": steps,
            "critic_loss": float(np.mean(losses)) if losses else float("nan"), "sigma": sigma,
            "collected": collected}


def _maybe_train(h: ApcHarness, losses: list) -> None:
    cfg = h.agent.cfg
    if len(h.buffer) >= max(cfg.batch, cfg.warmup):
        losses.append(h.agent.train_step(h.buffer, h.host_rng).critic_loss)


def _run_inline(h: ApcHarness, episodes: int, deadline) -> ApcResult:
    agent, cfg = h.agent, h.agent.cfg
    env = h.tasks[0].make()
    curve, collected = [], 0
    for _ in range(episodes):
        if deadline is not None and time.perf_counter() > deadline:
            break
        ep, env_seed, noise_seed, sigma = _next_job(h, 0, len(curve), episodes)
        noise = np.random.default_rng(noise_seed)
        policy = agent.actor.copy() if cfg.refresh == "episode" else agent.actor
        h.snapshot_seq += 1
        obs = env.reset(env_seed)
        ret, steps, losses = 0.0, 0, []
        while True:
            a = act(policy, obs, True, noise, _boosted(cfg, env, sigma))
            res = env.step(a)
            h.buffer.push(Transition(obs, a, res.reward, res.obs, res.done, tag=0))
            collected += 1
            _maybe_train(h, losses)
            ret += res.reward
            steps += 1
            obs = res.obs
            if res.done or (deadline is not None and time.perf_counter() > deadline):
                break
        curve.append(_curve_row(ep, 0, env_seed, ret, steps, losses, sigma, collected))
    return ApcResult(agent, curve, collected, agent.train_steps)


def _worker_main(wid, task, sizes, shared, stop, refresh, cfg, jobs, out):
    env = task.make()
    actor = Mlp(sizes, "tanh")
    view = np.frombuffer(shared.get_obj())

    def pull():
        with shared.get_lock():
            actor.load_flat(view)

    while True:
        job = jobs.get()
        if job is None:
            break
        ep, env_seed, noise_seed, sigma = job
        noise = np.random.default_rng(noise_seed)
        pull()
        obs = env.reset(env_seed)
        ret, steps = 0.0, 0
        while not stop.is_set():
            if refresh == "step":
                pull()
            a = act(actor, obs, True, noise, _boosted(cfg, env, sigma))
            res = env.step(a)
            out.put(("t", wid, obs, a, res.reward, res.obs, res.done))
            ret += res.reward
            steps += 1
            obs = res.obs
            if res.done:
                break
        out.put(("done", wid, ep, env_seed, ret, steps, sigma))
    out.put(("exit", wid))


def _run_parallel(h: ApcHarness, episodes: int, deadline) -> ApcResult:
    agent, cfg = h.agent, h.agent.cfg
    ctx = mp.get_context("fork")
    shared = ctx.Array("d", agent.actor.n_params)
    view = np.frombuffer(shared.get_obj())
    stop = ctx.Event()
    jobs = [ctx.Queue() for _ in range(h.workers)]
    out = ctx.Queue()

    def publish():
        with shared.get_lock():
            view[:] = agent.actor.flat()
        h.snapshot_seq += 1

    publish()
    procs = [ctx.Process(target=_worker_main,
                         args=(w, h.tasks[w], agent.actor.sizes, shared, stop, cfg.refresh, cfg, jobs[w], out),
                         daemon=True)
             for w in range(h.workers)]
    for p in procs:
        p.start()

    curve, collected, dispatched, running = [], 0, 0, 0
    losses = {w: [] for w in range(h.workers)}

    def expired():
        return deadline is not None and time.perf_counter() > deadline

    for w in range(h.workers):
        if dispatched < episodes:
            jobs[w].put(_next_job(h, w, dispatched, episodes))
            dispatched += 1
            running += 1
    try:
        while running > 0:
            msg = out.get()
            if msg[0] == "t":
                _, wid, s, a, r, s2, d = msg
                h.buffer.push(Transition(s, a, r, s2, d, tag=wid))
                collected += 1
                if not expired():
                    _maybe_train(h, losses[wid])
                    if cfg.refresh == "step":
                        publish()
                else:
                    stop.set()
            elif msg[0] == "done":
                _, wid, ep, env_seed, ret, steps, sigma = msg
                running -= 1
                curve.append(_curve_row(ep, wid, env_seed, ret, steps, losses[wid], sigma, collected))
                losses[wid] = []
                if dispatched < episodes and not expired():
                    publish()
                    jobs[wid].put(_next_job(h, wid, dispatched, episodes))
                    dispatched += 1
                    running += 1
    finally:
        stop.set()
        for q in jobs:
            q.put(None)
        exited = 0
        while exited < h.workers:
            msg = out.get()
            if msg[0] == "exit":
                exited += 1
            elif msg[0] == "t":
                _, wid, s, a, r, s2, d = msg
                h.buffer.push(Transition(s, a, r, s2, d, tag=wid))
                collected += 1
        for p in procs:
            p.join()
    return ApcResult(agent, curve, collected, agent.train_steps)


# --- evaluation -------------------------------------------------------------------

Policy = Callable[[np.ndarray, CrewEnv], np.ndarray]


def actor_policy(actor: Mlp) -> Policy:
    return lambda obs, env: act(actor, obs, False, None, 0.0)


def frozen_after(policy: Policy, slot: int) -> Policy:
    """Follow ``policy`` until ``slot``, then hold every UAV in place."""
    def run(obs, env):
        if env.slot >= slot:
            return np.zeros(env.action_dim)
        return policy(obs, env)
    return run


@dataclass
class EpisodeMetrics:
    seed: int
    served: list  # per slot 1..T
    events: list  # (slot, kind, uav)
    mean_served: float
    windows: list = field(default_factory=list)  # per event {slot, kind, uav, pre, post}
    trajectories: Optional[np.ndarray] = None  # (T+1, N, 2)


def _windows(served_series, events, window):
    out = []
    for slot, kind, uav in events:
        # served_series[k] is the count at slot k + 1
        pre = served_series[max(0, slot - 1 - window):slot - 1]
        post = served_series[slot - 1:slot - 1 + window]
        out.append({"slot": slot, "kind": kind, "uav": uav,
                    "pre": float(np.mean(pre)) if pre else None,
                    "post": float(np.mean(post)) if post else None})
    return out


def rollout(task: CrewTask, policy: Policy, seed: int, trace_path=None, window: int = 10) -> EpisodeMetrics:
    env = task.make()
    obs = env.reset(seed)
    series, events, traj = [], [], [env.world.positions()[:, :2].copy()]
    records = [{"schema": TRACE_SCHEMA, "kind": "crew", "seed": seed}]
    records.append(trace_record(env.world, served(env.world).total))
    while True:
        res = env.step(policy(obs, env))
        series.append(res.info["served"])
        for e in res.info["fired"]:
            events.append((env.slot, e.kind, e.uav_id))
        traj.append(env.world.positions()[:, :2].copy())
        records.append(env.trace(res.info["served"]))
        obs = res.obs
        if res.done:
            break
    if trace_path is not None:
        write_jsonl(trace_path, records)
    return EpisodeMetrics(seed, series, events, float(np.mean(series)), _windows(series, events, window),
                          np.array(traj))


def evaluate(agent: DdpgAgent, task: CrewTask, seeds, trace_dir=None, window: int = 10,
             policy: Optional[Policy] = None) -> dict:
    """Noise-free rollouts; summary of served users overall and around events."""
    policy = policy or actor_policy(agent.actor)
    runs = []
    for seed in seeds:
        path = None if trace_dir is None else Path(trace_dir) / f"trace_seed{seed}.jsonl"
        runs.append(rollout(task, policy, seed, path, window))
    summary = {"mean_served": float(np.mean([r.mean_served for r in runs])),
               "per_seed": {r.seed: r.mean_served for r in runs}}
    windows = [w for r in runs for w in r.windows]
    if windows:
        summary["event_windows"] = windows
    return {"summary": summary, "runs": runs}


def write_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def grid_oracle(scenario: Scenario, seed: int, grid: int = 20) -> tuple[float, tuple]:
    """Best static placement of a single UAV on a ``grid`` x ``grid`` lattice,
    scored by mean served users over one episode's user draws."""
    w = scenario.world
    world = init_world(scenario, seed)
    draws = []
    for t in range(1, w.slots + 1):
        draws.append(sample_users(replace(world, clock=replace(world.clock, slot_index=t))))
    xs = (np.arange(grid) + 0.5) * w.width / grid
    ys = (np.arange(grid) + 0.5) * w.height / grid
    radius = w.altitude * math.tan(scenario.coverage.aperture / 2)
    cap = scenario.coverage.capacity
    best, best_xy = -1.0, None
    for x in xs:
        for y in ys:
            total = 0
            for users in draws:
                inside = np.hypot(users[:, 0] - x, users[:, 1] - y) <= radius
                total += min(cap, int(inside.sum()))
            mean = total / len(draws)
            if mean > best:
                best, best_xy = mean, (float(x), float(y))
    return best, best_xy
