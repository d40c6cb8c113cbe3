"""Footprint geometry, capacity-limited user assignment and disc overlap."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CoverageModel:
    aperture_deg: float = 120.0
    capacity: int = 20

    def __post_init__(self):
        if not 0.0 < self.aperture_deg < 180.0:
            raise ValueError(f"aperture_deg must lie in (0, 180), got {self.aperture_deg}")
        if self.capacity <= 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")

    @property
    def aperture(self) -> float:
        return math.radians(self.aperture_deg)


def footprint_radius(h: float, model: CoverageModel) -> float:
    if h <= 0:
        raise ValueError(f"altitude must be positive, got {h}")
    return h * math.tan(model.aperture / 2.0)


@dataclass
class ServedCount:
    total: int
    per_uav: np.ndarray
    # index into the UAV list, -1 when unserved
    assignment: np.ndarray


def count_served(users, uavs, model: CoverageModel) -> ServedCount:
    """Greedy capacity-limited assignment of users to covering UAVs.

    Users are visited in index order. Each goes to the nearest UAV whose
    footprint contains it and which still has capacity; equal distances
    resolve to the lower UAV index. ``uavs`` holds (x, y, z) rows and the
    footprint of each follows from its altitude z.
    """
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    uavs = np.asarray(uavs, dtype=float).reshape(-1, 3)
    n, m = len(users), len(uavs)
    if n == 0 or m == 0:
        return ServedCount(0, np.zeros(m, dtype=int), np.full(n, -1, dtype=int))

    radii = np.array([footprint_radius(z, model) for z in uavs[:, 2]])
    dist = np.hypot(users[:, None, 0] - uavs[None, :, 0], users[:, None, 1] - uavs[None, :, 1])
    covered = dist <= radii[None, :]

    # fast path: nearest covering UAV per user; valid whenever no UAV fills up
    masked = np.where(covered, dist, np.inf)
    nearest = np.argmin(masked, axis=1)
    has_cover = covered.any(axis=1)
    assignment = np.where(has_cover, nearest, -1)
    per_uav = np.bincount(assignment[has_cover], minlength=m)
    if per_uav.max(initial=0) <= model.capacity:
        return ServedCount(int(has_cover.sum()), per_uav, assignment)

    order = np.argsort(masked, axis=1, kind="stable")
    remaining = np.full(m, model.capacity)
    assignment = np.full(n, -1, dtype=int)
    for u in np.flatnonzero(has_cover):
        for j in order[u]:
            if not covered[u, j]:
                break
            if remaining[j] > 0:
                remaining[j] -= 1
                assignment[u] = j
                break
    served = assignment >= 0
    per_uav = np.bincount(assignment[served], minlength=m)
    return ServedCount(int(served.sum()), per_uav, assignment)


def overlap_area(p1, r1: float, p2, r2: float) -> float:
    """Area of the intersection of two discs."""
    if r1 < 0 or r2 < 0:
        raise ValueError("radii must be non-negative")
    d = math.hypot(p1[0] - p2[0], p1[1] - p2[1])
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    a1 = r1 * r1 * math.acos(max(-1.0, min(1.0, (d * d + r1 * r1 - r2 * r2) / (2 * d * r1))))
    a2 = r2 * r2 * math.acos(max(-1.0, min(1.0, (d * d + r2 * r2 - r1 * r1) / (2 * d * r2))))
    k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return a1 + a2 - 0.5 * math.sqrt(max(0.0, k))
