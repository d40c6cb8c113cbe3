"""Proactive charging profiles in two stages.

Stage one tabulates, hour by hour, how many users k well-placed UAVs can
serve. Stage two learns an hourly SERVE / CHARGE / IDLE assignment per UAV
from that table with a DDPG actor whose continuous scores are turned into
feasible assignments by a rank-based repair.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .coverage import count_served
from .ddpg import ApcHarness, DdpgAgent, DdpgConfig, StepResult, act, apc_run, CrewTask, rollout
from .energy import EnergyModel, energy_to_charge, step_battery
from .status import Status
from .world import ClusterConfig, Region, Scenario, UavConfig, UserField, sample_mixture


class Mode(str, Enum):
    SERVE = "SERVE"
    CHARGE = "CHARGE"
    IDLE = "IDLE"


MODES = (Mode.SERVE, Mode.CHARGE, Mode.IDLE)
_AS_STATUS = {Mode.SERVE: Status.SERVING, Mode.CHARGE: Status.CHARGING, Mode.IDLE: Status.IDLE}


class InfeasibleError(ValueError):
    def __init__(self, hours, message=None):
        self.hours = list(hours)
        super().__init__(message or f"no crew size meets the service floor in hour(s) {self.hours}")


class TooLargeError(ValueError):
    pass


@dataclass
class SchedulerConfig:
    n_uavs: int = 4
    hours: int = 24
    start_hour: int = 0
    coeff: float = 0.5
    p_min: float = 0.6
    theta_charge: float = 0.5
    # scores at or above this volunteer to serve beyond the hourly floor; None disables volunteering
    theta_serve: Optional[float] = None
    initial_battery: float = 1.0  # fraction of b_max
    battery_jitter: float = 0.0  # per-episode initial battery drawn from [1 - jitter, 1] * initial
    initial_status: str = "IDLE"
    idle_altitude: float = 0.0
    violation_penalty: float = 1.0
    backend: str = "oracle"
    restarts: int = 10
    mapping_episodes: int = 60


# --- stage one: mapping table -----------------------------------------------------

class MappingTable:
    """users[k][h]: most users k UAVs can serve in hour h (k = 0..n_max)."""

    def __init__(self, users, provenance=None, demand=None):
        self.users = np.asarray(users, dtype=np.int64)
        k1, h = self.users.shape
        self.provenance = [list(row) for row in provenance] if provenance is not None else \
            [["oracle"] * h for _ in range(k1)]
        self.demand = None if demand is None else np.asarray(demand, dtype=np.int64)

    @property
    def n_max(self) -> int:
        return self.users.shape[0] - 1

    @property
    def hours(self) -> int:
        return self.users.shape[1]

    def __eq__(self, other):
        if not isinstance(other, MappingTable):
            return NotImplemented
        same_demand = (self.demand is None and other.demand is None) or (
            self.demand is not None and other.demand is not None and np.array_equal(self.demand, other.demand))
        return np.array_equal(self.users, other.users) and self.provenance == other.provenance and same_demand

    def is_monotone(self) -> bool:
        return bool(np.all(self.users[0] == 0) and np.all(np.diff(self.users, axis=0) >= 0))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "hour", "users", "backend", "demand"])
            for k in range(self.users.shape[0]):
                for h in range(self.hours):
                    d = "" if self.demand is None else int(self.demand[h])
                    w.writerow([k, h, int(self.users[k, h]), self.provenance[k][h], d])

    @classmethod
    def from_csv(cls, path) -> "MappingTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        k1 = max(int(r["k"]) for r in rows) + 1
        h = max(int(r["hour"]) for r in rows) + 1
        users = np.zeros((k1, h), dtype=np.int64)
        prov = [[""] * h for _ in range(k1)]
        demand = np.zeros(h, dtype=np.int64)
        have_demand = True
        for r in rows:
            k, hr = int(r["k"]), int(r["hour"])
            users[k, hr] = int(r["users"])
            prov[k][hr] = r["backend"]
            if r.get("demand", "") == "":
                have_demand = False
            else:
                demand[hr] = int(r["demand"])
        return cls(users, prov, demand if have_demand else None)


def hour_users(scenario: Scenario, hour_of_day: int, seed: int) -> np.ndarray:
    """Static snapshot of the user field for one hour of the day."""
    w = scenario.world
    uf = UserField(np.array([c.center for c in w.clusters], dtype=float),
                   np.zeros((len(w.clusters), 2)),
                   np.array([c.std for c in w.clusters], dtype=float),
                   np.array([c.weight for c in w.clusters], dtype=float),
                   w.total_users, tuple(w.demand_profile))
    frac = w.demand_profile[hour_of_day % len(w.demand_profile)]
    n = math.ceil(w.total_users * frac - 1e-9)
    rng = np.random.default_rng([seed, 7919, hour_of_day])
    return sample_mixture(uf, n, 0, Region(w.width, w.height), rng)


def _served_at(users, centers, altitude, coverage) -> int:
    pos = np.column_stack([centers, np.full(len(centers), altitude)])
    return count_served(users, pos, coverage).total


def oracle_placement(users, k: int, scenario: Scenario, rng: np.random.Generator, restarts: int = 10):
    """k-means placements (best of ``restarts``) refined by a coverage pattern search."""
    w = scenario.world
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    if k == 0 or len(users) == 0:
        return 0, np.zeros((k, 2))
    cov, alt = scenario.coverage, w.altitude
    best_count, best = -1, None
    for _ in range(restarts):
        m = min(k, len(users))
        centers = users[rng.choice(len(users), size=m, replace=False)].copy()
        if m < k:
            extra = rng.uniform([0, 0], [w.width, w.height], size=(k - m, 2))
            centers = np.vstack([centers, extra])
        for _ in range(100):
            d = np.hypot(users[:, None, 0] - centers[None, :, 0], users[:, None, 1] - centers[None, :, 1])
            label = np.argmin(d, axis=1)
            moved = centers.copy()
            for j in range(k):
                if np.any(label == j):
                    moved[j] = users[label == j].mean(axis=0)
            if np.allclose(moved, centers):
                break
            centers = moved
        c = _served_at(users, centers, alt, cov)
        if c > best_count:
            best_count, best = c, centers
    step = w.altitude * math.tan(cov.aperture / 2) / 2
    dirs = [(math.cos(a), math.sin(a)) for a in np.arange(8) * math.pi / 4]
    centers = best.copy()
    while step >= 1.0:
        improved = False
        for j in range(k):
            for dx, dy in dirs:
                trial = centers.copy()
                trial[j, 0] = min(w.width, max(0.0, trial[j, 0] + dx * step))
                trial[j, 1] = min(w.height, max(0.0, trial[j, 1] + dy * step))
                c = _served_at(users, trial, alt, cov)
                if c > best_count:
                    best_count, centers, improved = c, trial, True
        if not improved:
            step /= 2
    return best_count, centers


def _ddpg_placement(users, k: int, scenario: Scenario, frac: float, cfg: SchedulerConfig, seed: int,
                    ddpg_cfg: Optional[DdpgConfig]):
    """Train a k-UAV positioning agent on the hour's static user field and
    score its final formation against that hour's users."""
    w = scenario.world
    xs = np.linspace(w.width * 0.3, w.width * 0.7, k)
    world = replace(w, n_max=k, demand_profile=[frac] * 24, events=[], quit_fraction=0.0,
                    clusters=[ClusterConfig(c.center, [0.0, 0.0], c.std, c.weight) for c in w.clusters],
                    uavs=[UavConfig(x=float(x), y=w.height / 2) for x in xs])
    task = CrewTask(replace(scenario, world=world))
    agent = DdpgAgent(4 * k + 1, 2 * k, ddpg_cfg, seed=seed)
    apc_run(ApcHarness.build(task, 1, agent, seed=seed), cfg.mapping_episodes)
    run = rollout(task, lambda obs, env: act(agent.actor, obs, False, None, 0.0), seed)
    final = run.trajectories[-1]
    return _served_at(users, final, w.altitude, scenario.coverage)


def build_mapping(scenario: Scenario, cfg: SchedulerConfig, backend: Optional[str] = None, seed: int = 0,
                  ddpg_cfg: Optional[DdpgConfig] = None) -> MappingTable:
    backend = backend or cfg.backend
    if backend not in ("oracle", "ddpg"):
        raise ValueError(f"unknown mapping backend {backend!r}")
    n_max, hours = cfg.n_uavs, cfg.hours
    users = np.zeros((n_max + 1, hours), dtype=np.int64)
    prov = [["oracle"] * hours for _ in range(n_max + 1)]
    demand = np.zeros(hours, dtype=np.int64)
    w = scenario.world
    for h in range(hours):
        hod = (cfg.start_hour + h) % 24
        pts = hour_users(scenario, hod, seed)
        demand[h] = len(pts)
        rng = np.random.default_rng([seed, 104729, h])
        for k in range(1, n_max + 1):
            if backend == "oracle":
                c, _ = oracle_placement(pts, k, scenario, rng, cfg.restarts)
            else:
                frac = w.demand_profile[hod % len(w.demand_profile)]
                c = _ddpg_placement(pts, k, scenario, frac, cfg, seed + 1000 * h + k, ddpg_cfg)
            users[k, h] = max(c, users[k - 1, h])
            prov[k][h] = backend
    table = MappingTable(users, prov, demand)
    assert table.is_monotone()
    return table


def baseline_min_uavs(table: MappingTable, demand, p_min: float) -> np.ndarray:
    """Smallest crew meeting p_min * demand in each hour."""
    demand = np.asarray(demand, dtype=float)
    if not table.is_monotone():
        raise ValueError("mapping table must be non-decreasing in k")
    k_min = np.zeros(len(demand), dtype=np.int64)
    bad = []
    for h, d in enumerate(demand):
        ok = np.flatnonzero(table.users[:, h] >= p_min * d - 1e-9)
        if len(ok) == 0:
            bad.append(h)
        else:
            k_min[h] = ok[0]
    if bad:
        raise InfeasibleError(bad)
    return k_min


# --- stage two: scheduling dynamics --------------------------------------------------

@dataclass
class SchedulerProblem:
    mapping: MappingTable
    energy: EnergyModel
    k_min: tuple
    demand: tuple
    n: int
    hours: int
    start_hour: int = 0
    p_min: float = 0.6
    theta_charge: float = 0.5
    theta_serve: Optional[float] = None
    serve_altitude: float = 100.0
    idle_altitude: float = 0.0
    initial_batteries: tuple = ()
    initial_status: Mode = Mode.IDLE
    battery_jitter: float = 0.0
    violation_penalty: float = 1.0

    def altitude(self, mode: Mode) -> float:
        if mode is Mode.SERVE:
            return self.serve_altitude
        if mode is Mode.CHARGE:
            return self.energy.cloud_top
        return self.idle_altitude

    def hour_of_day(self, h: int) -> int:
        return (self.start_hour + h) % 24


def make_problem(mapping: MappingTable, scenario: Scenario, cfg: SchedulerConfig) -> SchedulerProblem:
    if mapping.demand is None:
        raise ValueError("mapping table carries no per-hour demand")
    if mapping.n_max < cfg.n_uavs or mapping.hours != cfg.hours:
        raise ValueError(f"mapping table is {mapping.n_max}x{mapping.hours}, need {cfg.n_uavs}x{cfg.hours}")
    k_min = baseline_min_uavs(mapping, mapping.demand, cfg.p_min)
    b0 = cfg.initial_battery * scenario.energy.b_max
    return SchedulerProblem(
        mapping=mapping, energy=scenario.energy, k_min=tuple(int(k) for k in k_min),
        demand=tuple(int(d) for d in mapping.demand), n=cfg.n_uavs, hours=cfg.hours, start_hour=cfg.start_hour,
        p_min=cfg.p_min, theta_charge=cfg.theta_charge, theta_serve=cfg.theta_serve,
        serve_altitude=scenario.world.altitude, idle_altitude=cfg.idle_altitude,
        initial_batteries=(b0,) * cfg.n_uavs, initial_status=Mode(cfg.initial_status),
        battery_jitter=cfg.battery_jitter, violation_penalty=cfg.violation_penalty)


class _Craft(NamedTuple):
    battery: float
    status: Status
    position: tuple


def hour_energy(problem: SchedulerProblem, battery: float, prev: Mode, mode: Mode, h: int) -> float:
    """Battery after one hour in ``mode``, having been in ``prev``; ascents cost climb energy."""
    e = problem.energy
    climb = max(0.0, problem.altitude(mode) - problem.altitude(prev))
    b = min(e.b_max, max(0.0, battery - e.climb_cost * climb))
    craft = _Craft(b, _AS_STATUS[mode], (0.0, 0.0, problem.altitude(mode)))
    return step_battery(craft, 0.0, e, problem.hour_of_day(h), 1.0)


def sustainable_at(problem: SchedulerProblem, battery: float, mode: Mode) -> bool:
    return battery >= energy_to_charge(problem.altitude(mode), problem.energy) + problem.energy.reserve


def _strands(problem: SchedulerProblem, battery: float, prev: Mode, hour: int) -> bool:
    """True if a voluntary climb to charge would leave the UAV unable to
    serve in the following hour."""
    after = hour_energy(problem, battery, prev, Mode.CHARGE, hour)
    then = hour_energy(problem, after, Mode.CHARGE, Mode.SERVE, hour + 1)
    return not sustainable_at(problem, then, Mode.SERVE)


class Repair(NamedTuple):
    modes: list
    forced: list  # ids forced to charge
    violation: bool  # fewer eligible UAVs than the hour's floor


def relax_and_repair(scores, batteries, statuses, k_min: int, problem: SchedulerProblem, hour: int = 0) -> Repair:
    """Turn per-UAV scores in [0, 1] into a feasible hourly assignment.

    1. A UAV that would be unsustainable after one more serving hour charges.
    2. The k_min best-scoring remaining UAVs serve (ties to the lower id).
    3. Every other UAV serves if its score reaches theta_serve (when set),
       charges below theta_charge, and idles otherwise. A voluntary charge that would leave
       the UAV unable to serve next hour becomes an idle hour; an idle hour
       that would leave it unable to reach the cloud top becomes a charge.
    """
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n = len(scores)
    modes = [None] * n
    forced = []
    for i in range(n):
        after = hour_energy(problem, batteries[i], Mode(statuses[i]), Mode.SERVE, hour)
        if not sustainable_at(problem, after, Mode.SERVE):
            modes[i] = Mode.CHARGE
            forced.append(i)
    rest = sorted((i for i in range(n) if modes[i] is None), key=lambda i: (-scores[i], i))
    for i in rest[:k_min]:
        modes[i] = Mode.SERVE
    for i in rest[k_min:]:
        if problem.theta_serve is not None and scores[i] >= problem.theta_serve:
            modes[i] = Mode.SERVE
        elif scores[i] < problem.theta_charge and not _strands(problem, batteries[i], Mode(statuses[i]), hour):
            modes[i] = Mode.CHARGE
        else:
            idle_after = hour_energy(problem, batteries[i], Mode(statuses[i]), Mode.IDLE, hour)
            modes[i] = Mode.IDLE if sustainable_at(problem, idle_after, Mode.IDLE) else Mode.CHARGE
    return Repair(modes, forced, len(rest) < k_min)


def scheduler_reward(served: float, demand: float, batteries, hour: int, coeff: float, hours: int,
                     b_max: float, violation: bool = False, penalty: float = 1.0) -> float:
    ratio = served / demand if demand > 0 else 0.0
    r = (1.0 - coeff) * ratio
    if violation:
        return r - penalty
    if hour == hours - 1:
        r += coeff * float(np.sum(batteries)) / (len(batteries) * b_max)
    return r


@dataclass
class ChargeProfile:
    modes: list  # [uav][hour] Mode
    batteries: list  # [uav][hour] battery at the end of the hour
    served: list  # per hour
    violations: list  # dicts: hour, kind, uav
    objective: float
    coeff: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["uav", "hour", "status", "battery"])
            for i, row in enumerate(self.modes):
                for h, m in enumerate(row):
                    w.writerow([i, h, m.value, repr(float(self.batteries[i][h]))])

    @property
    def final_energy(self) -> float:
        return float(sum(row[-1] for row in self.batteries)) if self.batteries and self.batteries[0] else 0.0

    @property
    def total_served(self) -> int:
        return int(sum(self.served))


class SchedulerEnv:
    """Hour-by-hour environment; an episode ends at the horizon or at the
    first constraint violation."""

    def __init__(self, problem: SchedulerProblem, coeff: float):
        self.problem = problem
        self.coeff = coeff
        self.state_dim = 4 * problem.n + 1
        self.action_dim = problem.n
        self.event_slots = ()

    @property
    def slot(self) -> int:
        return self.hour

    def reset(self, seed: Optional[int] = None, batteries=None) -> np.ndarray:
        p = self.problem
        if batteries is None:
            batteries = np.array(p.initial_batteries, dtype=float)
            if p.battery_jitter > 0 and seed is not None:
                rng = np.random.default_rng(seed)
                batteries = batteries * (1.0 - p.battery_jitter * rng.random(p.n))
        self.batteries = [float(b) for b in batteries]
        self.modes = [p.initial_status] * p.n
        self.hour = 0
        self.history = {"modes": [], "batteries": [], "served": [], "violations": [], "rewards": []}
        return self.observe()

    def observe(self) -> np.ndarray:
        p = self.problem
        out = np.zeros(self.state_dim)
        for i in range(p.n):
            out[4 * i] = self.batteries[i] / p.energy.b_max
            out[4 * i + 1 + MODES.index(self.modes[i])] = 1.0
        out[-1] = self.hour / p.hours
        return out

    def scores(self, action) -> np.ndarray:
        return (np.clip(np.asarray(action, dtype=float), -1.0, 1.0) + 1.0) / 2.0

    def step(self, action) -> StepResult:
        p, h = self.problem, self.hour
        rep = relax_and_repair(self.scores(action), self.batteries, self.modes, p.k_min[h], p, h)
        return self.step_modes(rep.modes)

    def step_modes(self, modes) -> StepResult:
        """Apply a raw assignment, bypassing the repair."""
        p, h = self.problem, self.hour
        modes = [Mode(m) for m in modes]
        new_b = [hour_energy(p, self.batteries[i], self.modes[i], modes[i], h) for i in range(p.n)]
        k = sum(m is Mode.SERVE for m in modes)
        demand = p.demand[h]
        served = min(int(p.mapping.users[k, h]), demand)
        violations = []
        if served < p.p_min * demand - 1e-9:
            violations.append({"hour": h, "kind": "service", "uav": None})
        for i in range(p.n):
            if not sustainable_at(p, new_b[i], modes[i]):
                violations.append({"hour": h, "kind": "sustainability", "uav": i})
        r = scheduler_reward(served, demand, new_b, h, self.coeff, p.hours, p.energy.b_max,
                             bool(violations), p.violation_penalty)
        self.batteries, self.modes = new_b, modes
        self.hour += 1
        hist = self.history
        hist["modes"].append(modes)
        hist["batteries"].append(new_b)
        hist["served"].append(served)
        hist["violations"].extend(violations)
        hist["rewards"].append(r)
        done = self.hour >= p.hours or bool(violations)
        return StepResult(self.observe(), r, done, {"served": served, "modes": modes, "violations": violations})

    def profile(self) -> ChargeProfile:
        hist = self.history
        n = self.problem.n
        modes = [[hist["modes"][h][i] for h in range(len(hist["modes"]))] for i in range(n)]
        bats = [[hist["batteries"][h][i] for h in range(len(hist["batteries"]))] for i in range(n)]
        return ChargeProfile(modes, bats, list(hist["served"]), list(hist["violations"]),
                             float(sum(hist["rewards"])), self.coeff)


@dataclass
class SchedulerTask:
    problem: SchedulerProblem
    coeff: float

    def make(self) -> SchedulerEnv:
        return SchedulerEnv(self.problem, self.coeff)


def evaluate_profile(problem: SchedulerProblem, coeff: float, modes_by_hour) -> ChargeProfile:
    """Roll a fixed assignment (hours x uavs) through the environment."""
    env = SchedulerEnv(problem, coeff)
    env.reset()
    for modes in modes_by_hour:
        if env.step_modes(modes).done:
            break
    return env.profile()


def audit_profile(problem: SchedulerProblem, profile: ChargeProfile) -> list:
    """Recompute every constraint shortfall of a profile from its modes and
    batteries alone."""
    found = []
    for h, served in enumerate(profile.served):
        if served < problem.p_min * problem.demand[h] - 1e-9:
            found.append({"hour": h, "kind": "service", "uav": None})
        for i in range(problem.n):
            alt = problem.altitude(profile.modes[i][h])
            if profile.batteries[i][h] < energy_to_charge(alt, problem.energy) + problem.energy.reserve:
                found.append({"hour": h, "kind": "sustainability", "uav": i})
    return found


def enumerate_optimal(problem: SchedulerProblem, coeff: float, limit: int = 10**6):
    """Exhaustive search over all 3^(n*hours) assignments, vectorized.

    Returns (best ChargeProfile, objective of every profile indexed by its
    base-3 code: digit h*n + i holds uav i's mode in hour h, 0/1/2 for
    SERVE/CHARGE/IDLE)."""
    n, H = problem.n, problem.hours
    total = 3 ** (n * H)
    if total > limit:
        raise TooLargeError(f"{n} UAVs x {H} hours gives 3^{n * H} = {total} profiles, limit is {limit}")
    e = problem.energy
    codes = np.arange(total)
    digits = np.empty((total, H, n), dtype=np.int8)
    rem = codes.copy()
    for h in range(H):
        for i in range(n):
            digits[:, h, i] = rem % 3
            rem //= 3
    alt = np.array([problem.altitude(m) for m in MODES])
    climb_need = np.array([energy_to_charge(a, e) for a in alt]) + e.reserve
    users = problem.mapping.users

    b = np.tile(np.asarray(problem.initial_batteries, dtype=float), (total, 1))
    prev = np.full((total, n), MODES.index(problem.initial_status), dtype=np.int8)
    alive = np.ones(total, dtype=bool)
    value = np.zeros(total)
    for h in range(H):
        st = digits[:, h, :]
        b = np.clip(b - e.climb_cost * np.maximum(0.0, alt[st] - alt[prev]), 0.0, e.b_max)
        gain = e.pv_rate * e.above_cloud(problem.hour_of_day(h))
        b = np.where(st == 0, b - (e.hover_cost + e.serve_cost),
                     np.where(st == 1, np.minimum(e.b_max, b + gain), b - e.idle_cost))
        b = np.clip(b, 0.0, e.b_max)
        k = (st == 0).sum(axis=1)
        demand = problem.demand[h]
        served = np.minimum(users[k, h], demand)
        viol = (served < problem.p_min * demand - 1e-9) | (b < climb_need[st]).any(axis=1)
        ratio = served / demand if demand > 0 else np.zeros(total)
        r = (1.0 - coeff) * ratio
        if h == H - 1:
            r = r + np.where(viol, 0.0, coeff * b.sum(axis=1) / (n * e.b_max))
        r = r - problem.violation_penalty * viol
        value += np.where(alive, r, 0.0)
        alive &= ~viol
        prev = st
    best = int(np.argmax(value))
    modes_by_hour = [[MODES[d] for d in digits[best, h]] for h in range(H)]
    return evaluate_profile(problem, coeff, modes_by_hour), value


# --- training ---------------------------------------------------------------------

class SchedulerResult(NamedTuple):
    agent: DdpgAgent
    curve: list
    profile: ChargeProfile


def policy_profile(agent: DdpgAgent, problem: SchedulerProblem, coeff: float, batteries=None) -> ChargeProfile:
    env = SchedulerEnv(problem, coeff)
    obs = env.reset(batteries=batteries)
    while True:
        res = env.step(act(agent.actor, obs, False, None, 0.0))
        obs = res.obs
        if res.done:
            return env.profile()


def train_scheduler(problem: SchedulerProblem, coeff: float, episodes: int, seed: int = 0,
                    cfg: Optional[DdpgConfig] = None, workers: int = 1) -> SchedulerResult:
    if len(problem.k_min) != problem.hours or max(problem.k_min) > problem.n:
        bad = [h for h, k in enumerate(problem.k_min) if k > problem.n]
        raise InfeasibleError(bad, f"baseline needs more than {problem.n} UAVs in hour(s) {bad}")
    agent = DdpgAgent(4 * problem.n + 1, problem.n, cfg, seed=seed)
    task = SchedulerTask(problem, coeff)
    res = apc_run(ApcHarness.build(task, workers, agent, seed=seed), episodes)
    return SchedulerResult(agent, res.curve, policy_profile(agent, problem, coeff))
