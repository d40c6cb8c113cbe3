"""Battery dynamics, cloud-attenuated solar intensity and climb accounting.

Time-based costs (hover, serve, idle, PV gain) are stated per slot of one
hour; callers running shorter slots pass ``dt`` as the slot length in hours.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

from .status import Status

# intensity drops to 1/10 over the first 300 m below the cloud top
DEFAULT_ATTENUATION = math.log(10.0) / 300.0


@dataclass(frozen=True)
class EnergyModel:
    b_max: float = 500.0
    hover_cost: float = 4.0
    move_cost: float = 0.01
    serve_cost: float = 2.0
    idle_cost: float = 0.5
    climb_cost: float = 0.1
    pv_rate: float = 60.0
    cloud_top: float = 2000.0
    attenuation_k: float = DEFAULT_ATTENUATION
    reserve_fraction: float = 0.02
    # 24 hourly values; None selects the built-in single-hump day curve
    day_profile: Optional[list[float]] = field(default=None)

    def __post_init__(self):
        costs = (self.hover_cost, self.move_cost, self.serve_cost, self.idle_cost,
                 self.climb_cost, self.pv_rate)
        if self.b_max <= 0:
            raise ValueError("b_max must be positive")
        if min(costs) < 0:
            raise ValueError("energy costs and pv_rate must be non-negative")
        if self.attenuation_k <= 0:
            raise ValueError("attenuation_k must be positive")
        if self.day_profile is not None:
            if len(self.day_profile) != 24 or not all(0.0 <= v <= 1.0 for v in self.day_profile):
                raise ValueError("day_profile needs 24 values in [0, 1]")

    @property
    def reserve(self) -> float:
        return self.reserve_fraction * self.b_max

    def above_cloud(self, hour: float) -> float:
        """Normalized intensity above the clouds at a given hour of day."""
        t = hour % 24.0
        if self.day_profile is not None:
            return float(self.day_profile[int(t)])
        return max(0.0, math.sin(math.pi * (t - 6.0) / 12.0))


def solar_intensity(hour: float, depth: float, model: EnergyModel) -> float:
    if depth < 0:
        raise ValueError(f"depth below cloud top must be >= 0, got {depth}")
    return model.above_cloud(hour) * math.exp(-model.attenuation_k * depth)


def step_battery(uav, moved: float, model: EnergyModel, hour: float, dt: float = 1.0) -> float:
    b = uav.battery
    status = Status(uav.status)
    if status is Status.SERVING:
        b = b - (model.hover_cost + model.serve_cost) * dt - model.move_cost * moved
    elif status is Status.IDLE:
        b = b - model.idle_cost * dt
    elif status is Status.CHARGING:
        # charging happens at the cloud top, depth 0
        b = min(model.b_max, b + model.pv_rate * solar_intensity(hour, 0.0, model) * dt)
    return min(model.b_max, max(0.0, b))


def energy_to_charge(altitude: float, model: EnergyModel) -> float:
    return model.climb_cost * max(0.0, model.cloud_top - altitude)


def is_sustainable(uav, model: EnergyModel, reserve: Optional[float] = None) -> bool:
    if reserve is None:
        reserve = model.reserve
    return uav.battery >= energy_to_charge(uav.position[2], model) + reserve


def intensity_table(model: EnergyModel, depths=(0.0, 100.0, 300.0, 600.0)) -> list[dict]:
    rows = []
    for hour in range(24):
        row = {"hour": hour}
        for d in depths:
            row[f"depth_{int(d)}m"] = solar_intensity(hour, d, model)
        rows.append(row)
    return rows


def write_intensity_csv(path, model: EnergyModel, depths=(0.0, 100.0, 300.0, 600.0)):
    rows = intensity_table(model, depths)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
