"""Procedural scene construction: desert terrain, posed targets, sun table.

The terrain is a value-noise heightmap that is exactly flat (elevation 0)
inside a disc around the origin so that orbiting targets always stand on
level ground.  Targets are primitive composites (body capsule, head sphere,
chest box); the chest box breaks front/back symmetry so target yaw is
observable in renders.  A target faces +x at yaw 0.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass, replace

import numpy as np

from .mesh import TriangleMesh, box, capsule, merge, uv_sphere

POSES = ("standing", "squatting", "prone")
N_VARIANTS = 8

# Uniform size perturbation per variant; variant 0 is the unscaled base.
VARIANT_SCALES = (1.00, 1.06, 0.94, 1.10, 0.90, 1.04, 0.96, 1.08)

FLAT_RADIUS_M = 60.0
TERRAIN_AMPLITUDE_M = 8.0

_SAND_BASE = (0.78, 0.68, 0.50)
_HEAD_COLOR = (0.84, 0.70, 0.55)
_CHEST_COLOR = (0.10, 0.10, 0.12)


@dataclass(frozen=True)
class IlluminationCondition:
    """A time-of-day: sun direction angles plus the ambient light floor."""

    name: str
    sun_elevation_deg: float
    sun_azimuth_deg: float
    ambient_fraction: float

    def validate(self) -> None:
        if not (0.0 < self.sun_elevation_deg <= 90.0):
            raise ValueError(
                f"sun_elevation_deg must be in (0, 90], got {self.sun_elevation_deg}")
        if not (0.0 <= self.ambient_fraction <= 1.0):
            raise ValueError(
                f"ambient_fraction must be in [0, 1], got {self.ambient_fraction}")


# Qualitative time-of-day ordering: dimmest light early morning and late
# afternoon, brightest around noon.  Overridable through the run config.
DEFAULT_SUN_TABLE = {
    "early_morning": IlluminationCondition("early_morning", 15.0, 90.0, 0.25),
    "noon": IlluminationCondition("noon", 60.0, 180.0, 0.40),
    "mid_afternoon": IlluminationCondition("mid_afternoon", 35.0, 225.0, 0.30),
    "late_afternoon": IlluminationCondition("late_afternoon", 10.0, 270.0, 0.20),
}


def sun_direction(condition: IlluminationCondition) -> np.ndarray:
    """Unit vector pointing from the sun toward the scene."""
    condition.validate()
    e = math.radians(condition.sun_elevation_deg)
    a = math.radians(condition.sun_azimuth_deg)
    return -np.array([
        math.cos(e) * math.cos(a),
        math.cos(e) * math.sin(a),
        math.sin(e),
    ])


# ---------------------------------------------------------------------------
# Terrain

def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic lattice hash -> [0, 1); uint32 arithmetic, wraps silently."""
    seed_term = np.uint32((seed & 0xFFFFFFFF) * 2246822519 & 0xFFFFFFFF)
    n = (ix.astype(np.uint32) * np.uint32(374761393)
         ^ iy.astype(np.uint32) * np.uint32(668265263)
         ^ seed_term)
    n ^= n >> np.uint32(13)
    n *= np.uint32(1274126177)
    n ^= n >> np.uint32(16)
    return n.astype(np.float64) / 4294967296.0


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def value_noise(x: np.ndarray, y: np.ndarray, seed: int) -> np.ndarray:
    """Bilinear value noise in [0, 1); inputs are in lattice units."""
    ix = np.floor(x).astype(np.int64)
    iy = np.floor(y).astype(np.int64)
    fx = _smoothstep(x - ix)
    fy = _smoothstep(y - iy)
    v00 = _hash01(ix, iy, seed)
    v10 = _hash01(ix + 1, iy, seed)
    v01 = _hash01(ix, iy + 1, seed)
    v11 = _hash01(ix + 1, iy + 1, seed)
    top = v00 + (v10 - v00) * fx
    bot = v01 + (v11 - v01) * fx
    return top + (bot - top) * fy


def _fbm01(x: np.ndarray, y: np.ndarray, seed: int, base_wavelength_m: float,
           octaves: int = 4) -> np.ndarray:
    total = np.zeros_like(x, dtype=np.float64)
    norm = 0.0
    amp = 1.0
    wavelength = base_wavelength_m
    for octave in range(octaves):
        total += amp * value_noise(x / wavelength, y / wavelength, seed + octave * 1013)
        norm += amp
        amp *= 0.5
        wavelength *= 0.5
    return total / norm


@dataclass
class Terrain:
    """Heightmap grid centered on the origin; treat as immutable once built."""

    seed: int
    extent_m: float
    cell_m: float
    flat_radius_m: float
    amplitude_m: float
    heights: np.ndarray      # (n+1, n+1) elevations, row-major over y then x
    cell_colors: np.ndarray  # (n, n, 3) base colors per cell

    @property
    def n_cells(self) -> int:
        return self.heights.shape[0] - 1

    def vertex_coords(self) -> np.ndarray:
        """1-D array of vertex positions along one axis (shared by x and y)."""
        n = self.n_cells
        return -self.extent_m / 2.0 + np.arange(n + 1) * (self.extent_m / n)

    def elevation_at(self, x: float, y: float) -> float:
        """Bilinear elevation at a world point; clamps outside the grid."""
        n = self.n_cells
        step = self.extent_m / n
        gx = np.clip((x + self.extent_m / 2.0) / step, 0.0, n - 1e-12)
        gy = np.clip((y + self.extent_m / 2.0) / step, 0.0, n - 1e-12)
        i, j = int(gx), int(gy)
        fx, fy = gx - i, gy - j
        h = self.heights
        top = h[j, i] + (h[j, i + 1] - h[j, i]) * fx
        bot = h[j + 1, i] + (h[j + 1, i + 1] - h[j + 1, i]) * fx
        return float(top + (bot - top) * fy)


def build_terrain(seed: int, extent_m: float, cell_m: float,
                  flat_radius_m: float = FLAT_RADIUS_M,
                  amplitude_m: float = TERRAIN_AMPLITUDE_M) -> Terrain:
    """Deterministic desert heightmap.

    Elevation is exactly 0 inside ``flat_radius_m`` of the origin and
    value-noise dunes of amplitude at most ``amplitude_m`` outside, blended
    in over a 40 m ramp.  Cell colors are a sand tone with noise mottling.
    """
    if extent_m <= 0:
        raise ValueError("extent_m must be > 0")
    if cell_m <= 0:
        raise ValueError("cell_m must be > 0")
    n = max(1, int(round(extent_m / cell_m)))
    coords = -extent_m / 2.0 + np.arange(n + 1) * (extent_m / n)
    gx, gy = np.meshgrid(coords, coords)  # gy varies along axis 0 (rows)

    noise = _fbm01(gx, gy, seed, base_wavelength_m=max(extent_m / 5.0, 4.0))
    dist = np.hypot(gx, gy)
    ramp = np.clip((dist - flat_radius_m) / 40.0, 0.0, 1.0)
    ramp = _smoothstep(ramp)
    heights = amplitude_m * noise * ramp
    heights[dist <= flat_radius_m] = 0.0

    # Per-cell mottling on an independent hash channel.
    ci = np.arange(n)
    cgx, cgy = np.meshgrid(ci, ci)
    mottle = (_hash01(cgx.astype(np.int64), cgy.astype(np.int64),
                      seed ^ 0x5EED) - 0.5) * 0.12
    cell_colors = np.clip(np.asarray(_SAND_BASE)[None, None, :]
                          + mottle[:, :, None], 0.0, 1.0)

    return Terrain(seed=seed, extent_m=float(extent_m), cell_m=float(cell_m),
                   flat_radius_m=float(flat_radius_m),
                   amplitude_m=float(amplitude_m),
                   heights=heights, cell_colors=cell_colors)


_TERRAIN_MESH_CACHE: dict[tuple, TriangleMesh] = {}


def terrain_mesh(terrain: Terrain) -> TriangleMesh:
    """Triangulated heightmap (two triangles per cell, normals up).

    Cached per process keyed on the terrain build parameters, which fully
    determine the mesh for terrains produced by ``build_terrain``.
    """
    key = (terrain.seed, terrain.extent_m, terrain.cell_m,
           terrain.flat_radius_m, terrain.amplitude_m, terrain.n_cells)
    cached = _TERRAIN_MESH_CACHE.get(key)
    if cached is not None:
        return cached

    n = terrain.n_cells
    coords = terrain.vertex_coords()
    gx, gy = np.meshgrid(coords, coords)
    verts = np.column_stack([gx.ravel(), gy.ravel(), terrain.heights.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    # (v00, v10, v11) and (v00, v11, v01) both wind counterclockwise seen
    # from +z, so flat ground gets +z normals.
    faces = np.empty((2 * n * n, 3), dtype=np.int32)
    faces[0::2] = np.column_stack([v00, v10, v11])
    faces[1::2] = np.column_stack([v00, v11, v01])
    colors = np.repeat(terrain.cell_colors.reshape(-1, 3), 2, axis=0)

    result = TriangleMesh(verts, faces, colors)
    _TERRAIN_MESH_CACHE[key] = result
    return result


# ---------------------------------------------------------------------------
# Targets

def _body_color(variant: int) -> tuple[float, float, float]:
    hue = (0.58 + variant / N_VARIANTS) % 1.0
    return colorsys.hsv_to_rgb(hue, 0.45, 0.38)


def build_target(pose: str, variant: int, chest_marker: bool = True) -> TriangleMesh:
    """Posed target mesh in its local frame (facing +x, feet at z = 0).

    Base dimensions before the per-variant uniform scaling:

      standing:  vertical capsule height 1.80 m radius 0.25 m, head sphere
                 r 0.12 m at z 1.65 m
      squatting: vertical capsule height 1.00 m radius 0.30 m, head at z 0.85 m
      prone:     horizontal capsule along +x, length 1.80 m radius 0.25 m,
                 head at the +x cap apex (z 0.25 m)

    The chest box is a darker, forward-offset block that makes yaw
    observable; ``chest_marker=False`` builds the rotationally
    near-symmetric control target.
    """
    if pose not in POSES:
        raise ValueError(f"unknown pose {pose!r}; expected one of {POSES}")
    if not (isinstance(variant, int) and 0 <= variant < N_VARIANTS):
        raise ValueError(f"variant must be an integer in [0, {N_VARIANTS}), got {variant!r}")

    body = _body_color(variant)
    parts: list[TriangleMesh] = []
    if pose == "standing":
        parts.append(capsule((0, 0, 0.25), (0, 0, 1.55), 0.25, body))
        parts.append(uv_sphere((0, 0, 1.65), 0.12, _HEAD_COLOR))
        if chest_marker:
            parts.append(box((0.20, -0.14, 0.95), (0.33, 0.14, 1.35), _CHEST_COLOR))
    elif pose == "squatting":
        parts.append(capsule((0, 0, 0.30), (0, 0, 0.70), 0.30, body))
        parts.append(uv_sphere((0, 0, 0.85), 0.12, _HEAD_COLOR))
        if chest_marker:
            parts.append(box((0.25, -0.14, 0.40), (0.40, 0.14, 0.70), _CHEST_COLOR))
    else:  # prone
        parts.append(capsule((-0.65, 0, 0.25), (0.65, 0, 0.25), 0.25, body))
        parts.append(uv_sphere((0.90, 0, 0.25), 0.12, _HEAD_COLOR))
        if chest_marker:
            parts.append(box((0.15, -0.14, 0.30), (0.55, 0.14, 0.50), _CHEST_COLOR))

    return merge(parts).transformed(scale=VARIANT_SCALES[variant])


@dataclass
class TargetInstance:
    """A placed target: local mesh plus its pose in the world."""

    object_id: int
    label: str
    category: str
    variant: int
    pose: str
    position: np.ndarray  # (3,) world; z is the ground offset
    yaw_deg: float
    mesh: TriangleMesh

    def world_mesh(self) -> TriangleMesh:
        return self.mesh.transformed(yaw_deg=self.yaw_deg, translation=self.position)

    def world_bbox_center(self) -> np.ndarray:
        lo, hi = self.world_mesh().bounds()
        return (lo + hi) / 2.0


@dataclass
class SceneSpec:
    terrain: Terrain
    targets: list[TargetInstance]
    sun: IlluminationCondition

    def label_map(self) -> dict[int, tuple[str, str]]:
        return {t.object_id: (t.label, t.category) for t in self.targets}

    def with_sun(self, sun: IlluminationCondition) -> "SceneSpec":
        return replace(self, sun=sun)


def place_target(scene: SceneSpec, mesh: TriangleMesh, position_xy, yaw_deg: float,
                 label: str = "person", category: str = "person",
                 pose: str = "standing", variant: int = 0) -> SceneSpec:
    """Ground the mesh on the terrain at ``position_xy`` and add it to the scene.

    The mesh is yawed about local z, then translated so its lowest vertex
    touches the terrain surface.  Placement must stay inside the flat disc
    so ground contact is exact; the new target gets the next free object id.
    """
    x, y = float(position_xy[0]), float(position_xy[1])
    if math.hypot(x, y) > scene.terrain.flat_radius_m:
        raise ValueError(
            f"target position ({x}, {y}) is outside the flat disc "
            f"(radius {scene.terrain.flat_radius_m} m)")
    elevation = scene.terrain.elevation_at(x, y)
    min_z = float(mesh.vertices[:, 2].min())  # yaw about z keeps z extents
    object_id = max((t.object_id for t in scene.targets), default=0) + 1
    scene.targets.append(TargetInstance(
        object_id=object_id, label=label, category=category,
        variant=variant, pose=pose,
        position=np.array([x, y, elevation - min_z]),
        yaw_deg=float(yaw_deg) % 360.0, mesh=mesh,
    ))
    return scene


def build_scene(seed: int, pose: str = "standing", variant: int = 0,
                yaw_deg: float = 0.0, sun: str = "noon",
                position_xy=(0.0, 0.0), terrain_extent_m: float = 512.0,
                terrain_cell_m: float = 4.0, chest_marker: bool = True,
                sun_table: dict[str, IlluminationCondition] | None = None,
                label: str = "person", category: str = "person") -> SceneSpec:
    """Single-target scene used by the generation pipeline."""
    table = sun_table if sun_table is not None else DEFAULT_SUN_TABLE
    if sun not in table:
        raise ValueError(f"unknown sun condition {sun!r}; "
                         f"expected one of {sorted(table)}")
    terrain = build_terrain(seed, terrain_extent_m, terrain_cell_m)
    scene = SceneSpec(terrain=terrain, targets=[], sun=table[sun])
    mesh = build_target(pose, variant, chest_marker=chest_marker)
    return place_target(scene, mesh, position_xy, yaw_deg,
                        label=label, category=category, pose=pose, variant=variant)
