"""Camera orbit mathematics and exhaustive sweep enumeration.

Conventions, fixed for the whole pipeline:

World frame (right-handed, z-up):
  - The orbit center sits at the origin and the ground plane is z = 0.
  - Azimuth is measured counterclockwise from +x, in degrees.
  - Altitude is the camera height above the ground plane, in meters.

Camera frame:
  - +x points right in the image, +y points up in the image, and the
    camera looks along -z.  Roll is always zero (horizon level).

Pitch is the angle between the horizontal plane and the line of sight
from the camera down to the look-at point; distance is the straight-line
camera-to-look-at length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

WORLD_UP = np.array([0.0, 0.0, 1.0])

DEFAULT_SUN_NAMES = ("early_morning", "noon", "mid_afternoon", "late_afternoon")


def _as_vec3(value) -> np.ndarray:
    v = np.asarray(value, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def look_at(eye, target, up_hint=WORLD_UP) -> np.ndarray:
    """Rotation matrix (columns = camera axes in world coords) looking at a point.

    The camera -z axis points from ``eye`` toward ``target`` and the camera
    +x axis is horizontal (perpendicular to ``up_hint``).  Raises
    ``ValueError`` when the view direction is degenerate or parallel to the
    up hint.
    """
    eye = _as_vec3(eye)
    target = _as_vec3(target)
    up_hint = _as_vec3(up_hint)

    forward = target - eye
    norm = np.linalg.norm(forward)
    if norm <= 1e-9:
        raise ValueError("look_at: eye and target coincide")
    forward = forward / norm

    right = np.cross(forward, up_hint)
    right_norm = np.linalg.norm(right)
    if right_norm <= 1e-9:
        raise ValueError("look_at: view direction is parallel to the up hint")
    right = right / right_norm

    up = np.cross(right, forward)
    # Columns: camera +x, +y, +z expressed in world coordinates; the camera
    # looks along -z, so the third column is the back vector.
    return np.column_stack([right, up, -forward])


@dataclass(frozen=True, eq=False)
class CameraPose:
    """Camera position (meters, world frame) and orientation.

    ``rotation`` maps camera-frame vectors to world-frame vectors; its
    columns are the camera axes expressed in world coordinates.
    """

    position: np.ndarray
    rotation: np.ndarray

    def world_to_camera(self, points) -> np.ndarray:
        """Transform world points (…, 3) into the camera frame."""
        p = np.asarray(points, dtype=np.float64)
        return (p - self.position) @ self.rotation

    @property
    def optical_axis(self) -> np.ndarray:
        """Unit view direction in world coordinates (camera -z)."""
        return -self.rotation[:, 2]


def pitch_and_distance(radius_m: float, altitude_m: float,
                       look_at_height_m: float = 0.0) -> tuple[float, float]:
    """Pitch (degrees) and line-of-sight distance (meters) of an orbit point."""
    if radius_m <= 0:
        raise ValueError("radius_m must be > 0")
    dz = altitude_m - look_at_height_m
    pitch = math.degrees(math.atan2(dz, radius_m))
    distance = math.hypot(radius_m, dz)
    return pitch, distance


def orbit_pose(center, radius_m: float, altitude_m: float, azimuth_deg: float,
               look_at_height_m: float = 0.0) -> CameraPose:
    """Pose on the circular orbit, aimed at the look-at point above ``center``.

    The camera sits at ``center + (r cos φ, r sin φ, h)`` and points at
    ``center + (0, 0, z_c)``.  For r > 0 the view direction always has a
    horizontal component, so the look-at frame is never degenerate.
    """
    if radius_m <= 0:
        raise ValueError("radius_m must be > 0")
    cx, cy, cz = _as_vec3(center)
    phi = math.radians(azimuth_deg)
    px = cx + radius_m * math.cos(phi)
    py = cy + radius_m * math.sin(phi)
    pz = cz + altitude_m

    # Closed-form equivalent of look_at(position, target): with r > 0 the
    # view direction always has a horizontal part, so right = forward x up
    # stays well defined.  Scalar math keeps sweep enumeration cheap.
    fx, fy, fz = cx - px, cy - py, cz + look_at_height_m - pz
    inv = 1.0 / math.sqrt(fx * fx + fy * fy + fz * fz)
    fx, fy, fz = fx * inv, fy * inv, fz * inv
    inv_r = 1.0 / math.sqrt(fx * fx + fy * fy)
    rx, ry = fy * inv_r, -fx * inv_r
    return CameraPose(
        position=np.array([px, py, pz]),
        rotation=np.array([
            [rx, ry * fz, -fx],
            [ry, -rx * fz, -fy],
            [0.0, rx * fy - ry * fx, -fz],
        ]))


@dataclass(frozen=True, eq=False)
class FrameSpec:
    """One point of a sweep: orbit parameters plus the derived camera pose."""

    frame_id: str
    altitude_m: float
    radius_m: float
    azimuth_deg: float
    sun: str
    pitch_deg: float
    distance_m: float
    camera: CameraPose


def frame_id(trial: str, sun_index: int, altitude_m: float, radius_m: float,
             azimuth_deg: float) -> str:
    """Deterministic, sortable, filesystem-safe frame identifier.

    Fields are fixed-width (one decimal, zero-padded to 5 characters, good
    for values below 1000 m / 360 degrees), e.g.
    ``trial/0/h005.0_r020.0_a090.0``.
    """
    return (f"{trial}/{sun_index}/"
            f"h{altitude_m:05.1f}_r{radius_m:05.1f}_a{azimuth_deg:05.1f}")


@dataclass(frozen=True)
class SweepConfig:
    """Grid of orbit parameters to enumerate exhaustively.

    The azimuth range is inclusive of both endpoints and must span less
    than a full turn so that frames stay unique after the mod-360
    normalization.
    """

    altitudes_m: tuple[float, ...]
    radii_m: tuple[float, ...]
    azimuth_start_deg: float = 0.0
    azimuth_end_deg: float = 358.0
    azimuth_step_deg: float = 2.0
    sun_conditions: tuple[str, ...] = DEFAULT_SUN_NAMES
    look_at_height_m: float = 0.0

    def validate(self) -> None:
        if not self.altitudes_m:
            raise ValueError("altitudes_m must be non-empty")
        if not self.radii_m:
            raise ValueError("radii_m must be non-empty")
        if not self.sun_conditions:
            raise ValueError("sun_conditions must be non-empty")
        if any(h < 0 for h in self.altitudes_m):
            raise ValueError("altitudes_m must all be >= 0")
        if any(r <= 0 for r in self.radii_m):
            raise ValueError("radii_m must all be > 0")
        if self.azimuth_step_deg <= 0:
            raise ValueError("azimuth_step_deg must be > 0")
        if self.azimuth_end_deg < self.azimuth_start_deg:
            raise ValueError("azimuth_end_deg must be >= azimuth_start_deg")
        if self.azimuth_end_deg - self.azimuth_start_deg >= 360.0:
            raise ValueError("azimuth range must span less than 360 degrees")
        if len(set(self.sun_conditions)) != len(self.sun_conditions):
            raise ValueError("sun_conditions must be unique")

    def azimuths(self) -> list[float]:
        """Azimuth samples from start to end inclusive, normalized to [0, 360)."""
        n = int(math.floor(
            (self.azimuth_end_deg - self.azimuth_start_deg) / self.azimuth_step_deg
            + 1e-9)) + 1
        return [(self.azimuth_start_deg + i * self.azimuth_step_deg) % 360.0
                for i in range(n)]

    def frame_count(self) -> int:
        return (len(self.altitudes_m) * len(self.radii_m)
                * len(self.azimuths()) * len(self.sun_conditions))


def default_trial_sweep(look_at_height_m: float = 0.0) -> SweepConfig:
    """Canonical single-trial grid: altitudes 5-50 m and radii 5-30 m in 5 m
    steps, a frame every 2 degrees, four times of day — 43,200 frames."""
    return SweepConfig(
        altitudes_m=tuple(float(h) for h in range(5, 51, 5)),
        radii_m=tuple(float(r) for r in range(5, 31, 5)),
        look_at_height_m=look_at_height_m,
    )


def enumerate_sweep(config: SweepConfig, trial: str = "trial",
                    center=(0.0, 0.0, 0.0)) -> list[FrameSpec]:
    """All frames of the sweep in fixed nesting order.

    Sun condition is the outermost loop, then altitude, then radius, with
    azimuth innermost.  The result is a pure function of the inputs:
    identical configs produce identical ids, order, and values.
    """
    config.validate()
    center = _as_vec3(center)
    z_c = config.look_at_height_m
    frames: list[FrameSpec] = []
    azimuths = config.azimuths()
    for sun_index, sun in enumerate(config.sun_conditions):
        for h in config.altitudes_m:
            for r in config.radii_m:
                pitch, dist = pitch_and_distance(r, h, z_c)
                for az in azimuths:
                    frames.append(FrameSpec(
                        frame_id=frame_id(trial, sun_index, h, r, az),
                        altitude_m=h,
                        radius_m=r,
                        azimuth_deg=az,
                        sun=sun,
                        pitch_deg=pitch,
                        distance_m=dist,
                        camera=orbit_pose(center, r, h, az, z_c),
                    ))
    return frames
