"""Independent per-UAV deep Q-learners trained on two complementary
environment copies: a UAV quitting copy A immediately joins copy B."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .coverage import footprint_radius, overlap_area
from .ddpg import TRACE_SCHEMA, write_jsonl
from .nn import Adam, Mlp, ReplayBuffer, Transition, load_checkpoint, save_checkpoint, soft_update
from .status import Status
from .world import (ConfigError, EventConfig, Scenario, UavConfig, WorldState, active_set, advance_slot, init_world,
                    join_uav, quit_uav, sample_users, served, trace_record)

COPY_A, COPY_B = 0, 1


@dataclass
class DqnConfig:
    hidden: list[int] = field(default_factory=lambda: [64, 64])
    lr: float = 5e-4
    gamma: float = 0.99
    tau: float = 0.005
    batch: int = 64
    buffer: int = 100_000
    warmup: int = 64
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay: float = 0.5  # fraction of episodes over which epsilon decays
    step: float = 25.0  # displacement per discrete move, meters
    overlap_weight: float = 0.3


def discrete_actions(step: float = 25.0) -> np.ndarray:
    """Stay, then the eight compass moves counter-clockwise from east."""
    moves = [(0.0, 0.0)]
    for k in range(8):
        ang = k * math.pi / 4
        moves.append((step * math.cos(ang), step * math.sin(ang)))
    out = np.array(moves)
    out[np.abs(out) < 1e-12] = 0.0
    return out


def local_state(world: WorldState, uav_id: int) -> np.ndarray:
    u = world.uavs[uav_id]
    bits = [1.0 if v.status is Status.SERVING else 0.0 for v in world.uavs]
    return np.array([u.position[0] / world.region.width, u.position[1] / world.region.height, *bits,
                     min(1.0, world.clock.slot_index / world.clock.slots)])


def local_reward(served_total: int, total_users: int, overlaps, radius: float, weight: float = 0.3) -> float:
    service = served_total / total_users if total_users > 0 else 0.0
    return service - weight * sum(overlaps) / (math.pi * radius * radius)


def shared_summary(world: WorldState, per_uav_served: dict) -> list[dict]:
    """What each UAV broadcasts every slot."""
    return [{"id": u.id, "x": u.position[0], "y": u.position[1],
             "active": u.status is Status.SERVING, "served": int(per_uav_served.get(u.id, 0))}
            for u in world.uavs]


def _copy_rewards(world: WorldState, ids: list, weight: float):
    """Per-agent rewards for the serving UAVs of one copy, plus served count."""
    if not ids:
        return {}, 0, {}
    users = sample_users(world)
    order = [u.id for u in world.uavs if u.status is Status.SERVING]
    sc = served(world, users)
    per_uav = {uid: int(c) for uid, c in zip(order, sc.per_uav)}
    cov = world.scenario.coverage
    out = {}
    for i in ids:
        pi = world.uavs[i].position
        ri = footprint_radius(pi[2], cov)
        overlaps = []
        for j in ids:
            if j != i:
                pj = world.uavs[j].position
                overlaps.append(overlap_area(pi, ri, pj, footprint_radius(pj[2], cov)))
        out[i] = local_reward(sc.total, len(users), overlaps, ri, weight)
    return out, sc.total, per_uav


class DqnAgent:
    def __init__(self, uav_id: int, state_dim: int, n_actions: int, cfg: DqnConfig, seed: int):
        self.uav_id = uav_id
        self.cfg = cfg
        self.net = Mlp([state_dim, *cfg.hidden, n_actions], "identity", seed=seed)
        self.target = self.net.copy()
        self.opt = Adam(self.net.params, lr=cfg.lr)
        self.buffer = ReplayBuffer(cfg.buffer, state_dim)
        self.updates = 0

    def act(self, s, eps: float, rng: np.random.Generator) -> int:
        n = self.net.sizes[-1]
        if eps > 0 and rng.random() < eps:
            return int(rng.integers(n))
        return int(np.argmax(self.net.forward(s)))

    def q_targets(self, batch) -> np.ndarray:
        q_next = self.target.forward(batch.next_states).max(axis=1)
        return batch.rewards + self.cfg.gamma * (1.0 - batch.terminals) * q_next

    def q_update(self, rng: np.random.Generator, batch=None) -> float:
        if batch is None:
            batch = self.buffer.sample(self.cfg.batch, rng)
        y = self.q_targets(batch)
        q = self.net.forward(batch.states)
        rows = np.arange(len(y))
        err = q[rows, batch.actions] - y
        upstream = np.zeros_like(q)
        upstream[rows, batch.actions] = 2.0 / len(y) * err
        grads = self.net.backward(batch.states, upstream)
        self.opt.step(self.net.params, grads.params)
        soft_update(self.target, self.net, self.cfg.tau)
        self.updates += 1
        return float(np.mean(err * err))


class DqnAgentSet:
    def __init__(self, n: int, cfg: DqnConfig = None, seed: int = 0):
        self.cfg = cfg or DqnConfig()
        self.seed = int(seed)
        self.actions = discrete_actions(self.cfg.step)
        self.state_dim = 2 + n + 1
        seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(self.seed).spawn(n)]
        self.agents = [DqnAgent(i, self.state_dim, len(self.actions), self.cfg, seeds[i]) for i in range(n)]

    def __len__(self):
        return len(self.agents)

    def __getitem__(self, i) -> DqnAgent:
        return self.agents[i]

    def save(self, path, meta: Optional[dict] = None) -> None:
        info = {"kind": "marl", "seed": self.seed, "n": len(self.agents), "state_dim": self.state_dim,
                "updates": [a.updates for a in self.agents]}
        info.update(meta or {})
        nets = {}
        for a in self.agents:
            nets[f"q{a.uav_id}"] = a.net
            nets[f"q{a.uav_id}_target"] = a.target
        save_checkpoint(path, nets, info)

    @classmethod
    def load(cls, path, cfg: DqnConfig = None) -> "DqnAgentSet":
        nets, meta = load_checkpoint(path)
        if meta.get("kind") != "marl":
            raise ConfigError(f"checkpoint {path} holds a {meta.get('kind')!r} agent, not marl")
        agents = cls(meta["n"], cfg, seed=meta["seed"])
        for a in agents.agents:
            a.net = nets[f"q{a.uav_id}"]
            a.target = nets[f"q{a.uav_id}_target"]
            a.updates = meta["updates"][a.uav_id]
        return agents


# --- dual-copy training -----------------------------------------------------------

def dual_scenario(scenario: Scenario) -> Scenario:
    """Crew changes in the dual copies come only from the episode's schedule."""
    return replace(scenario, world=replace(scenario.world, events=[], quit_fraction=0.0))


@dataclass
class DualCopyEpisode:
    copy_a: WorldState
    copy_b: WorldState
    schedule: list  # (slot, uav_id), sorted by slot


def quit_schedule(n: int, slots: int, rng: np.random.Generator) -> list:
    """n-1 sequential quits in random order at random distinct slots."""
    order = rng.permutation(n)[:n - 1]
    k = min(n - 1, max(0, slots - 1))
    when = np.sort(rng.choice(np.arange(1, slots), size=k, replace=False)) if k else []
    return [(int(t), int(i)) for t, i in zip(when, order)]


def make_dual_episode(scenario: Scenario, rng: np.random.Generator, schedule=None) -> DualCopyEpisode:
    sc = dual_scenario(scenario)
    seed_a, seed_b = (int(x) for x in rng.integers(0, 2**31 - 1, size=2))
    copy_a = init_world(sc, seed_a)
    copy_b = init_world(sc, seed_b)
    copy_b = replace(copy_b, uavs=tuple(quit_uav(u) for u in copy_b.uavs))
    if schedule is None:
        schedule = quit_schedule(len(copy_a.uavs), copy_a.clock.slots, rng)
    n = len(copy_a.uavs)
    for _, uid in schedule:
        if not 0 <= uid < n:
            raise ConfigError(f"quit schedule references unknown uav {uid}")
    return DualCopyEpisode(copy_a, copy_b, sorted(schedule))


class DualEpisodeResult(NamedTuple):
    streams: dict  # uav id -> list of Transition, in push order
    partition: list  # per slot (active A, active B)
    violations: int
    returns: dict  # copy tag -> summed served users
    losses: list


def partition_ok(active_a, active_b, n: int) -> bool:
    return not (active_a & active_b) and (active_a | active_b) == frozenset(range(n))


def run_dual_episode(agents: DqnAgentSet, episode: DualCopyEpisode, rng: np.random.Generator,
                     eps: float, train: bool = True) -> DualEpisodeResult:
    copies = [episode.copy_a, episode.copy_b]
    n = len(copies[0].uavs)
    weight = agents.cfg.overlap_weight
    schedule = list(episode.schedule)
    streams = {i: [] for i in range(n)}
    partition, violations, losses = [], 0, []
    returns = {COPY_A: 0, COPY_B: 0}

    def record():
        nonlocal violations
        a, b = active_set(copies[0]).active, active_set(copies[1]).active
        partition.append((a, b))
        if not partition_ok(a, b, n):
            violations += 1

    record()
    while copies[0].clock.slot_index < copies[0].clock.slots:
        pending = []
        for tag, world in enumerate(copies):
            ids = sorted(active_set(world).active)
            moves = np.zeros((n, 2))
            states, acts = {}, {}
            for i in ids:
                states[i] = local_state(world, i)
                acts[i] = agents[i].act(states[i], eps, rng)
                moves[i] = agents.actions[acts[i]]
            nxt = advance_slot(world, moves)
            rewards, total, _ = _copy_rewards(nxt, ids, weight)
            returns[tag] += total
            copies[tag] = nxt
            pending.append((tag, ids, states, acts, rewards))

        slot = copies[0].clock.slot_index
        quitting = set()
        while schedule and schedule[0][0] <= slot:
            _, uid = schedule.pop(0)
            if copies[0].uavs[uid].status is Status.SERVING:
                quitting.add(uid)
                ua = copies[0].uavs[uid]
                a_uavs = list(copies[0].uavs)
                a_uavs[uid] = quit_uav(ua)
                b_uavs = list(copies[1].uavs)
                b_uavs[uid] = join_uav(b_uavs[uid], ua.position[0], ua.position[1], ua.battery)
                copies[0] = replace(copies[0], uavs=tuple(a_uavs))
                copies[1] = replace(copies[1], uavs=tuple(b_uavs))

        end = slot >= copies[0].clock.slots
        for tag, ids, states, acts, rewards in pending:
            for i in ids:
                gone = tag == COPY_A and i in quitting
                t = Transition(states[i], acts[i], rewards[i], local_state(copies[tag], i), end or gone, tag)
                agents[i].buffer.push(t)
                streams[i].append(t)
        record()

        if train:
            cfg = agents.cfg
            for agent in agents.agents:
                if len(agent.buffer) >= max(cfg.batch, cfg.warmup):
                    losses.append(agent.q_update(rng))
    return DualEpisodeResult(streams, partition, violations, returns, losses)


def epsilon_schedule(cfg: DqnConfig, episode: int, episodes: int) -> float:
    horizon = max(1.0, cfg.eps_decay * episodes)
    frac = min(1.0, episode / horizon)
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac


def train_marl(agents: DqnAgentSet, scenario: Scenario, episodes: int, seed: int = 0,
               on_episode=None) -> list:
    rng = np.random.default_rng(seed)
    curve = []
    for ep in range(episodes):
        eps = epsilon_schedule(agents.cfg, ep, episodes)
        episode = make_dual_episode(scenario, rng)
        res = run_dual_episode(agents, episode, rng, eps, train=True)
        row = {"episode": ep, "epsilon": eps, "served_a": res.returns[COPY_A], "served_b": res.returns[COPY_B],
               "return": res.returns[COPY_A] + res.returns[COPY_B],
               "critic_loss": float(np.mean(res.losses)) if res.losses else float("nan"),
               "violations": res.violations}
        curve.append(row)
        if on_episode is not None:
            on_episode(episode, res)
    return curve


# --- evaluation -------------------------------------------------------------------

def random_crew_script(n: int, slots: int, changes: int, rng: np.random.Generator,
                       start_active: Optional[int] = None) -> tuple[list, list]:
    """Random sequence of single quits/joins. Returns (initially active ids, events)."""
    active = set(range(n if start_active is None else start_active))
    initial = sorted(active)
    when = np.sort(rng.choice(np.arange(1, slots), size=min(changes, slots - 1), replace=False))
    events = []
    for t in when:
        away = sorted(set(range(n)) - active)
        can_quit, can_join = len(active) > 1, bool(away)
        if can_quit and (not can_join or rng.random() < 0.5):
            uid = int(rng.choice(sorted(active)))
            active.discard(uid)
            events.append(EventConfig(kind="quit", uav=uid, slot=int(t)))
        elif can_join:
            uid = int(rng.choice(away))
            active.add(uid)
            events.append(EventConfig(kind="join", uav=uid, slot=int(t)))
    return initial, events


def crew_scenario(scenario: Scenario, initial_active, events) -> Scenario:
    w = scenario.world
    base = init_world(scenario, 0)
    uavs = [UavConfig(x=u.position[0], y=u.position[1], battery=u.battery,
                      status="serving" if u.id in initial_active else "away") for u in base.uavs]
    return replace(scenario, world=replace(w, uavs=uavs, events=list(events), quit_fraction=0.0))


def rollout_crew(agents: DqnAgentSet, scenario: Scenario, seed: int, freeze_after: Optional[int] = None,
                 window: int = 10, trace_path=None) -> dict:
    world = init_world(scenario, seed)
    n = len(world.uavs)
    series, changes, phases = [], [], []
    records = [{"schema": TRACE_SCHEMA, "kind": "marl", "seed": seed}]
    records.append(trace_record(world, served(world).total, copy="A"))
    while world.clock.slot_index < world.clock.slots:
        moves = np.zeros((n, 2))
        if freeze_after is None or world.clock.slot_index < freeze_after:
            for i in sorted(active_set(world).active):
                moves[i] = agents.actions[agents[i].act(local_state(world, i), 0.0, None)]
        before = world
        world = advance_slot(world, moves)
        count = served(world).total
        series.append(count)
        records.append(trace_record(world, count, copy="A"))
        if world.last_step.fired:
            for e in world.last_step.fired:
                changes.append({"slot": world.clock.slot_index, "kind": e.kind, "uav": e.uav_id})
            phases.append({"until": world.clock.slot_index,
                           "positions": {u.id: [u.position[0], u.position[1]] for u in before.uavs
                                         if u.status is Status.SERVING}})
    phases.append({"until": world.clock.slot_index,
                   "positions": {u.id: [u.position[0], u.position[1]] for u in world.uavs
                                 if u.status is Status.SERVING}})
    for c in changes:
        s = c["slot"]
        pre = series[max(0, s - 1 - window):s - 1]
        post = series[s - 1:s - 1 + window]
        c["pre"] = float(np.mean(pre)) if pre else None
        c["post"] = float(np.mean(post)) if post else None
    if trace_path is not None:
        write_jsonl(trace_path, records)
    return {"seed": seed, "served": series, "mean_served": float(np.mean(series)), "changes": changes,
            "phases": phases}


def evaluate_random_crew(agents: DqnAgentSet, scenario: Scenario, seeds, changes: int = 4,
                         trace_dir=None, window: int = 10) -> dict:
    """Greedy rollouts under a random quit/join script drawn per seed."""
    runs = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        initial, events = random_crew_script(scenario.world.n_max, scenario.world.slots, changes, rng)
        sc = crew_scenario(scenario, initial, events)
        path = None if trace_dir is None else Path(trace_dir) / f"trace_seed{seed}.jsonl"
        runs.append(rollout_crew(agents, sc, seed, window=window, trace_path=path))
    return {"summary": {"mean_served": float(np.mean([r["mean_served"] for r in runs]))}, "runs": runs}
