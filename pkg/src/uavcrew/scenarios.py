"""Named desk-scale scenarios shared by the experiment scripts and the
acceptance checks."""
from __future__ import annotations

from .coverage import CoverageModel
from .ddpg import DdpgConfig
from .energy import EnergyModel
from .solar import SchedulerConfig
from .world import ClusterConfig, EventConfig, Scenario, UavConfig, WorldConfig


def single_cluster() -> Scenario:
    """One UAV, one static cluster of 50 users off the start point."""
    world = WorldConfig(n_max=1, slots=50, total_users=50, demand_profile=[1.0] * 24,
                        clusters=[ClusterConfig([620.0, 580.0], [0.0, 0.0], 70.0, 1.0)],
                        uavs=[UavConfig(500.0, 500.0)], quit_fraction=0.0)
    return Scenario(world, CoverageModel(capacity=50), EnergyModel())


SINGLE_CLUSTER_DDPG = DdpgConfig(gamma=0.9, actor_lr=1e-3, sigma_start=0.5)


def centre_quit(slots: int = 40) -> Scenario:
    """Three UAVs over two flank clusters and a heavy centre cluster. The
    centre UAV (id 1) quits at T/2; serving the centre again means pulling
    a flank UAV inward."""
    clusters = [
        ClusterConfig([500.0, 250.0], [0.0, 0.0], 40.0, 0.2),
        ClusterConfig([750.0, 625.0], [0.0, 0.0], 40.0, 0.2),
        ClusterConfig([500.0, 500.0], [0.0, 0.0], 50.0, 0.6),
    ]
    world = WorldConfig(n_max=3, slots=slots, total_users=80, demand_profile=[1.0] * 24, clusters=clusters,
                        uavs=[UavConfig(500.0, 250.0), UavConfig(500.0, 500.0), UavConfig(750.0, 625.0)],
                        quit_fraction=0.0, events=[EventConfig(kind="quit", uav=1, slot=slots // 2)])
    return Scenario(world, CoverageModel(capacity=30), EnergyModel())


def _schedule_world() -> WorldConfig:
    clusters = [
        ClusterConfig([280.0, 300.0], [0.0, 0.0], 50.0, 0.47),
        ClusterConfig([700.0, 650.0], [0.0, 0.0], 50.0, 0.47),
        ClusterConfig([250.0, 800.0], [0.0, 0.0], 30.0, 0.06),
    ]
    return WorldConfig(n_max=4, total_users=60, clusters=clusters)


def schedule_energy() -> EnergyModel:
    """Serving costs 12 Wh per hour; the climb to the cloud top from 100 m costs 95 Wh."""
    return EnergyModel(serve_cost=8.0, climb_cost=0.05)


def tradeoff() -> tuple[Scenario, SchedulerConfig]:
    """Three UAVs over a day: two serve the big clusters, the third decides
    between a small cluster and saving energy."""
    sc = Scenario(_schedule_world(), CoverageModel(capacity=40), schedule_energy())
    return sc, SchedulerConfig(n_uavs=3, hours=24, start_hour=6, p_min=0.8, theta_serve=0.5, battery_jitter=0.1)


def toy() -> tuple[Scenario, SchedulerConfig]:
    """Two UAVs, four hours: small enough for exhaustive enumeration."""
    sc = Scenario(_schedule_world(), CoverageModel(capacity=40), schedule_energy())
    return sc, SchedulerConfig(n_uavs=2, hours=4, start_hour=10, p_min=0.4, coeff=0.5, theta_serve=0.5)


SCHEDULER_DDPG = DdpgConfig(actor_lr=1e-3, sigma_start=0.5, preact_penalty=0.05)
