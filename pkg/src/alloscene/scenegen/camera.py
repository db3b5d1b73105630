"""Camera poses and pinhole projection for the circular-arena scenes.

Two pose families exist: ``ring`` poses orbit the arena at a fixed
distance, always looking at the arena centre, and ``agent`` poses stand
inside the arena at eye height looking along a heading. World frame:
x/y span the ground plane, z points up; azimuth is measured
counter-clockwise from +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

DEFAULT_VFOV = math.radians(60.0)
NEAR_PLANE = 0.05


class PoseError(ValueError):
    """Raised for degenerate camera configurations."""


@dataclass
class CameraPose:
    """One viewpoint of a scene.

    Args:
        azimuth: world yaw in radians, [0, 2*pi). For ring poses this is
            the angular position on the orbit; for agent poses the
            heading of gaze.
        elevation: ring poses: angular height above the ground plane,
            (0, pi/2]. Agent poses: gaze pitch relative to the horizon
            (0 looks at the horizon).
        radius: ring orbit distance from the arena centre in meters.
        kind: "ring" or "agent".
        agent_xy: ground position of an agent pose.
        eye_height: camera height above ground for agent poses.
    """

    azimuth: float
    elevation: float
    radius: float
    kind: str = "ring"
    agent_xy: tuple[float, float] | None = None
    eye_height: float = 1.0

    def __post_init__(self):
        self.azimuth = float(self.azimuth) % (2.0 * math.pi)
        if self.kind == "ring":
            if self.radius <= 0:
                raise PoseError(f"ring pose needs radius > 0, got {self.radius}")
            if not 0.0 < self.elevation <= math.pi / 2:
                raise PoseError(f"ring elevation must be in (0, pi/2], got {self.elevation}")
        elif self.kind == "agent":
            if self.agent_xy is None:
                raise PoseError("agent pose needs agent_xy")
            if self.eye_height <= 0:
                raise PoseError("agent pose needs eye_height > 0")
        else:
            raise PoseError(f"unknown pose kind {self.kind!r}")

    @property
    def position(self) -> np.ndarray:
        """Camera position in world coordinates."""
        if self.kind == "ring":
            ce = math.cos(self.elevation)
            return np.array([
                self.radius * ce * math.cos(self.azimuth),
                self.radius * ce * math.sin(self.azimuth),
                self.radius * math.sin(self.elevation),
            ])
        x, y = self.agent_xy
        return np.array([x, y, self.eye_height])

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(right, up, forward) unit vectors of the camera frame."""
        eye = self.position
        if self.kind == "ring":
            forward = -eye
        else:
            cp = math.cos(self.elevation)
            forward = np.array([
                cp * math.cos(self.azimuth),
                cp * math.sin(self.azimuth),
                math.sin(self.elevation),
            ])
        forward = forward / np.linalg.norm(forward)
        world_up = np.array([0.0, 0.0, 1.0])
        right = np.cross(forward, world_up)
        n = np.linalg.norm(right)
        if n < 1e-9:
            # looking straight down: keep the screen x axis tangent to the orbit
            right = np.array([-math.sin(self.azimuth), math.cos(self.azimuth), 0.0])
        else:
            right = right / n
        up = np.cross(right, forward)
        return right, up, forward

    def to_json(self) -> dict:
        d = asdict(self)
        if d["agent_xy"] is not None:
            d["agent_xy"] = list(d["agent_xy"])
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CameraPose":
        d = dict(d)
        if d.get("agent_xy") is not None:
            d["agent_xy"] = tuple(d["agent_xy"])
        return cls(**d)


def focal_lengths(size: tuple[int, int], vfov: float = DEFAULT_VFOV) -> tuple[float, float]:
    """Pixel focal lengths (fx, fy) for image (H, W) at the given vertical FOV.

    Square pixels: the horizontal FOV follows from the aspect ratio.
    """
    h, w = size
    fy = (h / 2.0) / math.tan(vfov / 2.0)
    return fy, fy  # fx == fy (square pixels)


def project_point(pose: CameraPose, world_point, size: tuple[int, int],
                  vfov: float = DEFAULT_VFOV):
    """Pinhole projection of one world point.

    Returns (u, v, depth) in pixel coordinates with depth the euclidean
    camera-to-point distance, or None when the point is behind the
    camera. Total function: never raises on finite input.
    """
    h, w = size
    right, up, forward = pose.basis()
    rel = np.asarray(world_point, dtype=float) - pose.position
    z = float(rel @ forward)
    if z < NEAR_PLANE:
        return None
    fx, fy = focal_lengths(size, vfov)
    u = w / 2.0 + fx * float(rel @ right) / z
    v = h / 2.0 - fy * float(rel @ up) / z
    return u, v, float(np.linalg.norm(rel))


def sample_ring_poses(rng: np.random.Generator, n: int, radius: float,
                      elevation_band: tuple[float, float]) -> list[CameraPose]:
    """n orbit poses with uniform azimuth and uniform elevation in the band."""
    lo, hi = elevation_band
    poses = []
    for _ in range(n):
        poses.append(CameraPose(
            azimuth=rng.uniform(0.0, 2.0 * math.pi),
            elevation=rng.uniform(lo, hi),
            radius=radius,
        ))
    return poses


def sample_agent_poses(rng: np.random.Generator, n: int, arena_radius: float,
                       eye_height: float = 1.0) -> list[CameraPose]:
    """n inside-arena poses at fixed eye height with random heading."""
    poses = []
    for _ in range(n):
        r = arena_radius * 0.6 * math.sqrt(rng.uniform())
        theta = rng.uniform(0.0, 2.0 * math.pi)
        poses.append(CameraPose(
            azimuth=rng.uniform(0.0, 2.0 * math.pi),
            elevation=0.0,
            radius=0.0,
            kind="agent",
            agent_xy=(r * math.cos(theta), r * math.sin(theta)),
            eye_height=eye_height,
        ))
    return poses
