"""Slotted simulation of a UAV crew serving a drifting Gaussian-mixture user field."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .coverage import CoverageModel, count_served
from .energy import EnergyModel, step_battery
from .status import Status


class ConfigError(ValueError):
    pass


# --- configuration -----------------------------------------------------------------

@dataclass
class ClusterConfig:
    center: list[float] = field(default_factory=lambda: [500.0, 500.0])
    velocity: list[float] = field(default_factory=lambda: [0.0, 0.0])
    std: float = 80.0
    weight: float = 1.0


@dataclass
class UavConfig:
    x: float = 500.0
    y: float = 500.0
    battery: Optional[float] = None  # None means full
    status: str = "serving"
    join_countdown: int = 0


@dataclass
class EventConfig:
    kind: str = "quit"
    uav: int = 0
    # exactly one trigger: slot index, or battery level in Wh (quit only)
    slot: Optional[int] = None
    battery: Optional[float] = None
    # join only: slots between the announcement and the actual join
    countdown: int = 0


def double_hump_demand(peaks=(9.0, 20.0), width: float = 3.0, floor: float = 0.2) -> list[float]:
    """Hourly active-user fraction with morning and evening peaks of 1.0."""
    out = []
    for h in range(24):
        bump = 0.0
        for p in peaks:
            d = min(abs(h - p), 24 - abs(h - p))
            bump = max(bump, math.exp(-0.5 * (d / width) ** 2))
        out.append(floor + (1.0 - floor) * bump)
    return out


@dataclass
class WorldConfig:
    width: float = 1000.0
    height: float = 1000.0
    n_max: int = 5
    slots: int = 100
    slot_seconds: float = 10.0
    altitude: float = 100.0
    d_max: float = 30.0
    start_hour: float = 12.0
    total_users: int = 100
    demand_profile: list[float] = field(default_factory=double_hump_demand)
    clusters: list[ClusterConfig] = field(default_factory=lambda: [ClusterConfig()])
    uavs: list[UavConfig] = field(default_factory=list)  # empty: spread along the diagonal
    spawn: list[float] = field(default_factory=lambda: [0.0, 500.0])
    join_battery: Optional[float] = None  # None keeps the joiner's stored battery
    quit_fraction: float = 0.05
    events: list[EventConfig] = field(default_factory=list)


@dataclass
class Scenario:
    world: WorldConfig = field(default_factory=WorldConfig)
    coverage: CoverageModel = field(default_factory=CoverageModel)
    energy: EnergyModel = field(default_factory=EnergyModel)


def validate_world(cfg: WorldConfig) -> None:
    if cfg.width <= 0 or cfg.height <= 0:
        raise ConfigError(f"region must be positive, got {cfg.width} x {cfg.height}")
    if cfg.n_max < 1:
        raise ConfigError(f"n_max must be >= 1, got {cfg.n_max}")
    if cfg.slots < 1:
        raise ConfigError(f"slots must be >= 1, got {cfg.slots}")
    if cfg.slot_seconds <= 0 or cfg.altitude <= 0 or cfg.d_max < 0:
        raise ConfigError("slot_seconds and altitude must be positive, d_max non-negative")
    if cfg.uavs and len(cfg.uavs) != cfg.n_max:
        raise ConfigError(f"{len(cfg.uavs)} uav entries for n_max={cfg.n_max}")
    if not cfg.clusters:
        raise ConfigError("at least one user cluster is required")
    weights = [c.weight for c in cfg.clusters]
    if min(weights) < 0 or not math.isclose(sum(weights), 1.0, abs_tol=1e-9):
        raise ConfigError(f"cluster weights must be non-negative and sum to 1, got {weights}")
    if any(c.std < 0 for c in cfg.clusters):
        raise ConfigError("cluster std must be >= 0")
    if not all(0.0 <= v <= 1.0 for v in cfg.demand_profile) or not cfg.demand_profile:
        raise ConfigError("demand_profile values must lie in [0, 1]")
    for u in cfg.uavs:
        Status(u.status)
    for e in cfg.events:
        if e.kind not in ("quit", "join"):
            raise ConfigError(f"unknown event kind {e.kind!r}")
        if not 0 <= e.uav < cfg.n_max:
            raise ConfigError(f"event references unknown uav {e.uav}")
        if (e.slot is None) == (e.battery is None):
            raise ConfigError("each event needs exactly one of slot / battery")
        if e.kind == "join" and e.slot is None:
            raise ConfigError("join events are slot-triggered")


# --- state ------------------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    width: float
    height: float

    def clamp(self, x: float, y: float) -> tuple[float, float, bool]:
        cx = min(self.width, max(0.0, x))
        cy = min(self.height, max(0.0, y))
        return cx, cy, (cx != x or cy != y)


@dataclass(frozen=True)
class SlotClock:
    slot_index: int
    slots: int
    slot_seconds: float


@dataclass(frozen=True)
class UserField:
    centers: np.ndarray  # (k, 2)
    velocities: np.ndarray  # (k, 2) meters per slot
    stds: np.ndarray
    weights: np.ndarray
    total_users: int
    demand_profile: tuple


@dataclass(frozen=True)
class Uav:
    id: int
    position: tuple  # (x, y, z)
    battery: float
    status: Status
    join_countdown: int = 0


@dataclass(frozen=True)
class CrewEvent:
    kind: str
    uav_id: int
    slot: Optional[int] = None
    battery: Optional[float] = None
    countdown: int = 0


@dataclass(frozen=True)
class StepReport:
    moved: tuple
    clipped: tuple  # displacement longer than d_max
    out_of_bound: tuple
    fired: tuple  # CrewEvents applied during the step


@dataclass(frozen=True)
class WorldState:
    region: Region
    clock: SlotClock
    user_field: UserField
    uavs: tuple
    events: tuple
    rng_seed: int
    scenario: Scenario
    last_step: Optional[StepReport] = None

    @property
    def hour(self) -> float:
        w = self.scenario.world
        return (w.start_hour + self.clock.slot_index * w.slot_seconds / 3600.0) % 24.0

    def positions(self) -> np.ndarray:
        return np.array([u.position for u in self.uavs], dtype=float)


class ActiveSet(NamedTuple):
    active: frozenset
    joining: frozenset


def _default_positions(cfg: WorldConfig) -> list[tuple[float, float]]:
    n = cfg.n_max
    return [(cfg.width * (i + 1) / (n + 1), cfg.height * (i + 1) / (n + 1)) for i in range(n)]


def init_world(scenario: Scenario, seed: int) -> WorldState:
    cfg = scenario.world
    validate_world(cfg)
    region = Region(float(cfg.width), float(cfg.height))
    b_max = scenario.energy.b_max
    uavs = []
    if cfg.uavs:
        specs = cfg.uavs
    else:
        specs = [UavConfig(x=x, y=y) for x, y in _default_positions(cfg)]
    for i, spec in enumerate(specs):
        x, y, _ = region.clamp(spec.x, spec.y)
        battery = b_max if spec.battery is None else min(b_max, max(0.0, spec.battery))
        status = Status(spec.status)
        countdown = int(spec.join_countdown)
        if countdown > 0:
            status = Status.AWAY
        uavs.append(Uav(i, (x, y, float(cfg.altitude)), battery, status, countdown))
    user_field = UserField(
        centers=np.array([c.center for c in cfg.clusters], dtype=float),
        velocities=np.array([c.velocity for c in cfg.clusters], dtype=float),
        stds=np.array([c.std for c in cfg.clusters], dtype=float),
        weights=np.array([c.weight for c in cfg.clusters], dtype=float),
        total_users=int(cfg.total_users),
        demand_profile=tuple(cfg.demand_profile),
    )
    events = tuple(CrewEvent(e.kind, e.uav, e.slot, e.battery, e.countdown) for e in cfg.events)
    return WorldState(region, SlotClock(0, int(cfg.slots), float(cfg.slot_seconds)), user_field,
                      tuple(uavs), events, int(seed), scenario)


def demand_fraction(user_field: UserField, hour: float) -> float:
    profile = user_field.demand_profile
    return float(profile[int(hour) % len(profile)])


def sample_mixture(user_field: UserField, n: int, slot: int, region: Region,
                   rng: np.random.Generator) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 2))
    centers = user_field.centers + user_field.velocities * slot
    p = np.asarray(user_field.weights, dtype=float)
    which = rng.choice(len(centers), size=n, p=p / p.sum())
    pts = centers[which] + rng.standard_normal((n, 2)) * user_field.stds[which, None]
    pts[:, 0] = np.clip(pts[:, 0], 0.0, region.width)
    pts[:, 1] = np.clip(pts[:, 1], 0.0, region.height)
    return pts


def sample_users(state: WorldState) -> np.ndarray:
    """User positions for the current slot; a pure function of (seed, slot)."""
    uf = state.user_field
    n = math.ceil(uf.total_users * demand_fraction(uf, state.hour) - 1e-9)
    rng = np.random.default_rng([state.rng_seed, state.clock.slot_index])
    return sample_mixture(uf, n, state.clock.slot_index, state.region, rng)


def active_set(state: WorldState) -> ActiveSet:
    active = frozenset(u.id for u in state.uavs if u.status is Status.SERVING)
    joining = frozenset(u.id for u in state.uavs if u.join_countdown > 0)
    return ActiveSet(active, joining)


def serving_positions(state: WorldState) -> tuple[list[int], np.ndarray]:
    ids = [u.id for u in state.uavs if u.status is Status.SERVING]
    pos = np.array([state.uavs[i].position for i in ids], dtype=float).reshape(-1, 3)
    return ids, pos


def served(state: WorldState, users: Optional[np.ndarray] = None):
    if users is None:
        users = sample_users(state)
    _, pos = serving_positions(state)
    return count_served(users, pos, state.scenario.coverage)


def quit_uav(uav: Uav) -> Uav:
    return replace(uav, status=Status.AWAY, join_countdown=0)


def join_uav(uav: Uav, x: float, y: float, battery: Optional[float] = None) -> Uav:
    return replace(uav, position=(x, y, uav.position[2]), status=Status.SERVING, join_countdown=0,
                   battery=uav.battery if battery is None else battery)


def advance_slot(state: WorldState, movements) -> WorldState:
    """Move serving UAVs, drain or charge batteries, fire due crew events and
    tick the clock. Displacements for non-serving UAVs are ignored."""
    cfg = state.scenario.world
    energy = state.scenario.energy
    movements = np.asarray(movements, dtype=float).reshape(len(state.uavs), 2)
    dt = state.clock.slot_seconds / 3600.0
    hour = state.hour
    new_slot = state.clock.slot_index + 1

    uavs, moved, clipped, oob = [], [], [], []
    for uav, (dx, dy) in zip(state.uavs, movements):
        dist, was_clipped, out = 0.0, False, False
        if uav.status is Status.SERVING:
            norm = math.hypot(dx, dy)
            if norm > cfg.d_max:
                dx, dy = dx * cfg.d_max / norm, dy * cfg.d_max / norm
                was_clipped = True
            x0, y0, z = uav.position
            x, y, out = state.region.clamp(x0 + dx, y0 + dy)
            dist = math.hypot(x - x0, y - y0)
            uav = replace(uav, position=(x, y, z))
        battery = step_battery(uav, dist, energy, hour, dt)
        uavs.append(replace(uav, battery=battery))
        moved.append(dist)
        clipped.append(was_clipped)
        oob.append(out)

    fired, pending = [], []
    for ev in state.events:
        u = uavs[ev.uav_id]
        if ev.kind == "quit":
            due = (ev.slot is not None and new_slot >= ev.slot) or \
                  (ev.battery is not None and u.battery <= ev.battery)
            if due and u.status is Status.SERVING:
                uavs[ev.uav_id] = quit_uav(u)
                fired.append(ev)
            elif due:
                fired.append(ev)  # nothing to quit; drop the event
            else:
                pending.append(ev)
        else:
            if new_slot >= ev.slot and u.status is Status.AWAY and u.join_countdown == 0:
                if ev.countdown > 0:
                    uavs[ev.uav_id] = replace(u, join_countdown=int(ev.countdown) + 1)
                else:
                    uavs[ev.uav_id] = replace(u, join_countdown=1)
                fired.append(ev)
            elif new_slot >= ev.slot and u.status is not Status.AWAY:
                fired.append(ev)  # JOIN only applies to an AWAY UAV
            else:
                pending.append(ev)

    threshold = cfg.quit_fraction * energy.b_max
    join_battery = None if cfg.join_battery is None else min(energy.b_max, cfg.join_battery)
    for i, u in enumerate(uavs):
        if u.join_countdown > 0:
            left = u.join_countdown - 1
            if left == 0:
                uavs[i] = join_uav(u, cfg.spawn[0], cfg.spawn[1], join_battery)
            else:
                uavs[i] = replace(u, join_countdown=left)
        elif u.status is Status.SERVING and threshold > 0 and u.battery <= threshold:
            uavs[i] = quit_uav(u)
            fired.append(CrewEvent("quit", u.id, battery=threshold))

    clock = replace(state.clock, slot_index=new_slot)
    report = StepReport(tuple(moved), tuple(clipped), tuple(oob), tuple(fired))
    return replace(state, clock=clock, uavs=tuple(uavs), events=tuple(pending), last_step=report)


def trace_record(state: WorldState, served_count: int, copy: Optional[str] = None) -> dict:
    rec = {
        "slot": state.clock.slot_index,
        "uavs": [{"id": u.id, "x": u.position[0], "y": u.position[1], "z": u.position[2],
                  "battery": u.battery, "status": u.status.value} for u in state.uavs],
        "served_count": int(served_count),
        "event_fired": [] if state.last_step is None else
        [{"kind": e.kind, "uav": e.uav_id} for e in state.last_step.fired],
    }
    if copy is not None:
        rec["copy"] = copy
    return rec
