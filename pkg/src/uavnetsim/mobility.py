"""Flight paths, ground node placement and the vehicle state snapshot."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from uavnetsim.core import US_PER_S

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class UavState:
    """State vector carried by telemetry: position, velocity, battery fraction."""

    t_us: int
    pos: Vec3
    vel: Vec3
    battery: float


def battery_fraction(t_us: int, drain_per_s: float = 0.001) -> float:
    return max(0.0, 1.0 - drain_per_s * (t_us / US_PER_S))


class RectangleLoop:
    """Closed rectangular patrol at fixed altitude with a dwell pause at each corner.

    Cruise legs run at constant speed; dwell keeps velocity zero, so the speed
    bound max|v| == cruise speed holds everywhere.
    """

    def __init__(self, center_xy: tuple[float, float], width_m: float, height_m: float,
                 altitude_m: float, speed_mps: float, dwell_s: float = 2.0):
        if speed_mps <= 0 or width_m <= 0 or height_m <= 0:
            raise ValueError("speed and rectangle dimensions must be positive")
        cx, cy = center_xy
        hw, hh = width_m / 2.0, height_m / 2.0
        corners = [(cx - hw, cy - hh), (cx + hw, cy - hh), (cx + hw, cy + hh), (cx - hw, cy + hh)]
        self.speed = speed_mps
        self.altitude = altitude_m
        # Piecewise timeline: alternating (cruise leg, dwell) entries.
        self._starts: list[float] = []
        self._segs: list[tuple] = []   # (p0, p1, duration_s, moving)
        t = 0.0
        for i, p0 in enumerate(corners):
            p1 = corners[(i + 1) % 4]
            leg = math.dist(p0, p1) / speed_mps
            self._starts.append(t)
            self._segs.append((p0, p1, leg, True))
            t += leg
            if dwell_s > 0:
                self._starts.append(t)
                self._segs.append((p1, p1, dwell_s, False))
                t += dwell_s
        self.period_s = t

    def position_at(self, t_us: int) -> tuple[Vec3, Vec3]:
        t = (t_us / US_PER_S) % self.period_s
        i = bisect_right(self._starts, t) - 1
        p0, p1, dur, moving = self._segs[i]
        if not moving:
            return (p0[0], p0[1], self.altitude), (0.0, 0.0, 0.0)
        frac = (t - self._starts[i]) / dur
        x = p0[0] + (p1[0] - p0[0]) * frac
        y = p0[1] + (p1[1] - p0[1]) * frac
        vx = (p1[0] - p0[0]) / dur
        vy = (p1[1] - p0[1]) / dur
        return (x, y, self.altitude), (vx, vy, 0.0)


class Orbit:
    """Constant-radius circle around a ground point; used for fixed-distance sweeps."""

    def __init__(self, center_xy: tuple[float, float], radius_m: float,
                 altitude_m: float, speed_mps: float, phase_rad: float = 0.0):
        if radius_m <= 0 or speed_mps <= 0:
            raise ValueError("radius and speed must be positive")
        self.cx, self.cy = center_xy
        self.radius = radius_m
        self.altitude = altitude_m
        self.speed = speed_mps
        self.phase = phase_rad
        self._omega = speed_mps / radius_m

    def position_at(self, t_us: int) -> tuple[Vec3, Vec3]:
        a = self.phase + self._omega * (t_us / US_PER_S)
        pos = (self.cx + self.radius * math.cos(a), self.cy + self.radius * math.sin(a), self.altitude)
        vel = (-self.speed * math.sin(a), self.speed * math.cos(a), 0.0)
        return pos, vel


def orbit_for_distance(bs_pos: Vec3, distance_m: float, altitude_m: float,
                       speed_mps: float) -> Orbit:
    """Orbit whose 3D range to the base station stays exactly at distance_m."""
    dz = altitude_m - bs_pos[2]
    if distance_m <= abs(dz):
        raise ValueError(f"distance {distance_m} m unreachable from altitude offset {dz} m")
    r = math.sqrt(distance_m ** 2 - dz ** 2)
    return Orbit((bs_pos[0], bs_pos[1]), r, altitude_m, speed_mps)


def uav_state(traj, t_us: int, drain_per_s: float = 0.001) -> UavState:
    pos, vel = traj.position_at(t_us)
    return UavState(t_us=t_us, pos=pos, vel=vel, battery=battery_fraction(t_us, drain_per_s))


def place_ground_nodes(rng: np.random.Generator, n: int, radius_m: float,
                       center_xy: tuple[float, float], z_m: float = 1.5) -> list[Vec3]:
    """Uniform positions on a disc: radius R*sqrt(u) keeps the area density flat."""
    out = []
    for _ in range(n):
        r = radius_m * math.sqrt(rng.random())
        theta = 2.0 * math.pi * rng.random()
        out.append((center_xy[0] + r * math.cos(theta), center_xy[1] + r * math.sin(theta), z_m))
    return out
