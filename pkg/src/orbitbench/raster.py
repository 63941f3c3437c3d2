"""Deterministic software rasterizer: RGB, object-id, and depth buffers.

Pixel conventions: image origin at the top-left, x (u) right, y (v) down.
Pixel (i, j) covers the unit square [i, i+1) x [j, j+1) and is sampled at
its center (i + 0.5, j + 0.5).  The look-at point projects to the exact
image center.

Rasterization rules (these make renders bitwise reproducible regardless of
how frames are distributed over workers):
  - top-left fill convention for pixels exactly on a triangle edge;
  - strict less-than depth test, equal-depth ties won by the lower object id;
  - perspective-correct depth via screen-space interpolation of 1/z;
  - triangles crossing the near plane are clipped, fragments at or beyond
    the far plane are discarded.

Shading is flat Lambert plus an ambient floor:
``ambient + (1 - ambient) * max(0, n . toward_sun)`` modulating the face
base color.  Background pixels get a constant sky color, id 0, and depth
equal to the far plane.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit
from PIL import Image

from .fsio import atomic_write_bytes
from .geometry import CameraPose
from .mesh import TriangleMesh, merge
from .scene import SceneSpec, sun_direction, terrain_mesh

SKY_COLOR = (0.66, 0.79, 0.90)


@dataclass(frozen=True)
class CameraIntrinsics:
    width_px: int = 512
    height_px: int = 512
    vertical_fov_deg: float = 60.0
    near_m: float = 0.1
    far_m: float = 1000.0

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("image dimensions must be >= 1 pixel")
        if not (0.0 < self.near_m < self.far_m):
            raise ValueError("require 0 < near_m < far_m")
        if not (0.0 < self.vertical_fov_deg < 180.0):
            raise ValueError("vertical_fov_deg must be in (0, 180)")

    @property
    def focal_px(self) -> float:
        return (self.height_px / 2.0) / math.tan(math.radians(self.vertical_fov_deg) / 2.0)

    @property
    def center_px(self) -> tuple[float, float]:
        return self.width_px / 2.0, self.height_px / 2.0


@dataclass
class FrameBuffers:
    rgb: np.ndarray    # (H, W, 3) uint8
    ids: np.ndarray    # (H, W) int32, 0 = background/terrain
    depth: np.ndarray  # (H, W) float64, camera-space meters; far where empty


def project_point(camera: CameraPose, intrinsics: CameraIntrinsics, world_point):
    """Pinhole projection to (u_px, v_px, depth_m); None when the point is
    at or behind the near plane."""
    pc = camera.world_to_camera(np.asarray(world_point, dtype=np.float64))
    depth = -pc[2]
    if depth <= intrinsics.near_m:
        return None
    cx, cy = intrinsics.center_px
    f = intrinsics.focal_px
    return (cx + f * pc[0] / depth, cy - f * pc[1] / depth, depth)


@njit(cache=True)
def _fill(xy, invz, colors, owners, far, ids, depth, rgb):
    height, width = ids.shape
    for t in range(xy.shape[0]):
        x0, y0 = xy[t, 0], xy[t, 1]
        x1, y1 = xy[t, 2], xy[t, 3]
        x2, y2 = xy[t, 4], xy[t, 5]
        z0, z1, z2 = invz[t, 0], invz[t, 1], invz[t, 2]

        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if area == 0.0:
            continue
        if area < 0.0:  # normalize winding so interior has positive edge funcs
            x1, y1, x2, y2 = x2, y2, x1, y1
            z1, z2 = z2, z1
            area = -area

        lo_x = min(x0, min(x1, x2))
        hi_x = max(x0, max(x1, x2))
        lo_y = min(y0, min(y1, y2))
        hi_y = max(y0, max(y1, y2))
        ix0 = max(int(math.ceil(lo_x - 0.5)), 0)
        ix1 = min(int(math.floor(hi_x - 0.5)), width - 1)
        iy0 = max(int(math.ceil(lo_y - 0.5)), 0)
        iy1 = min(int(math.floor(hi_y - 0.5)), height - 1)
        if ix0 > ix1 or iy0 > iy1:
            continue

        # Top-left rule: a boundary pixel belongs to edge a->b when the edge
        # is horizontal going +x (top) or goes -y (left); with y down and
        # positive-area winding the interior then owns exactly one side.
        tl0 = (y1 == y2 and x2 > x1) or (y2 < y1)  # edge v1->v2
        tl1 = (y2 == y0 and x0 > x2) or (y0 < y2)  # edge v2->v0
        tl2 = (y0 == y1 and x1 > x0) or (y1 < y0)  # edge v0->v1

        owner = owners[t]
        r8, g8, b8 = colors[t, 0], colors[t, 1], colors[t, 2]
        for iy in range(iy0, iy1 + 1):
            py = iy + 0.5
            for ix in range(ix0, ix1 + 1):
                px = ix + 0.5
                e0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
                e1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
                e2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
                if e0 < 0.0 or e1 < 0.0 or e2 < 0.0:
                    continue
                if e0 == 0.0 and not tl0:
                    continue
                if e1 == 0.0 and not tl1:
                    continue
                if e2 == 0.0 and not tl2:
                    continue
                iz = (e0 * z0 + e1 * z1 + e2 * z2) / area
                if iz <= 0.0:
                    continue
                z = 1.0 / iz
                if z >= far:
                    continue
                zb = depth[iy, ix]
                if z < zb or (z == zb and owner < ids[iy, ix]):
                    depth[iy, ix] = z
                    ids[iy, ix] = owner
                    rgb[iy, ix, 0] = r8
                    rgb[iy, ix, 1] = g8
                    rgb[iy, ix, 2] = b8


def _clip_near(tri_cam: np.ndarray, near: float) -> list[np.ndarray]:
    """Sutherland-Hodgman clip of one camera-space triangle against the
    near plane (keep depth >= near); returns 0..2 triangles."""
    poly = []
    for i in range(3):
        a = tri_cam[i]
        b = tri_cam[(i + 1) % 3]
        da = -a[2]
        db = -b[2]
        if da >= near:
            poly.append(a)
        if (da >= near) != (db >= near):
            t = (near - da) / (db - da)
            poly.append(a + t * (b - a))
    if len(poly) < 3:
        return []
    return [np.stack([poly[0], poly[i], poly[i + 1]])
            for i in range(1, len(poly) - 1)]


def _scene_geometry(scene: SceneSpec) -> tuple[TriangleMesh, np.ndarray]:
    """World-space mesh of the whole scene plus per-face owner ids
    (0 for terrain)."""
    meshes = [terrain_mesh(scene.terrain)]
    owners = [np.zeros(len(meshes[0].faces), dtype=np.int32)]
    for target in scene.targets:
        wm = target.world_mesh()
        meshes.append(wm)
        owners.append(np.full(len(wm.faces), target.object_id, dtype=np.int32))
    return merge(meshes), np.concatenate(owners)


def render(scene: SceneSpec, camera: CameraPose,
           intrinsics: CameraIntrinsics = CameraIntrinsics()) -> FrameBuffers:
    """Rasterize the scene; identical inputs give bitwise-identical buffers."""
    w, h = intrinsics.width_px, intrinsics.height_px
    ids = np.zeros((h, w), dtype=np.int32)
    depth = np.full((h, w), intrinsics.far_m, dtype=np.float64)
    rgb = np.empty((h, w, 3), dtype=np.uint8)
    rgb[:] = np.round(np.asarray(SKY_COLOR) * 255.0).astype(np.uint8)

    world, owners = _scene_geometry(scene)
    if len(world.faces) == 0:
        return FrameBuffers(rgb=rgb, ids=ids, depth=depth)

    # Flat Lambert shading, quantized once per face.
    toward_sun = -sun_direction(scene.sun)
    ambient = scene.sun.ambient_fraction
    ndotl = np.clip(world.face_normals() @ toward_sun, 0.0, None)
    shade = ambient + (1.0 - ambient) * ndotl
    colors8 = np.round(np.clip(world.face_colors * shade[:, None], 0.0, 1.0)
                       * 255.0).astype(np.uint8)

    cam = camera.world_to_camera(world.vertices)
    tri_cam = cam[world.faces]            # (M, 3, 3)
    tri_depth = -tri_cam[:, :, 2]
    near = intrinsics.near_m

    full_in = (tri_depth >= near).all(axis=1)
    crossing = ~full_in & (tri_depth > near).any(axis=1)

    cam_tris = [tri_cam[full_in]]
    tri_colors = [colors8[full_in]]
    tri_owners = [owners[full_in]]
    for idx in np.nonzero(crossing)[0]:
        for clipped in _clip_near(tri_cam[idx], near):
            cam_tris.append(clipped[None, :, :])
            tri_colors.append(colors8[idx:idx + 1])
            tri_owners.append(owners[idx:idx + 1])
    cam_tris = np.concatenate(cam_tris, axis=0)
    tri_colors = np.concatenate(tri_colors, axis=0)
    tri_owners = np.concatenate(tri_owners, axis=0)
    if len(cam_tris) == 0:
        return FrameBuffers(rgb=rgb, ids=ids, depth=depth)

    cx, cy = intrinsics.center_px
    f = intrinsics.focal_px
    d = -cam_tris[:, :, 2]
    u = cx + f * cam_tris[:, :, 0] / d
    v = cy - f * cam_tris[:, :, 1] / d

    # Coarse viewport cull; the kernel clamps exactly.
    visible = ((u.min(axis=1) < w) & (u.max(axis=1) > 0.0)
               & (v.min(axis=1) < h) & (v.max(axis=1) > 0.0))
    if visible.any():
        xy = np.empty((int(visible.sum()), 6), dtype=np.float64)
        xy[:, 0::2] = u[visible]
        xy[:, 1::2] = v[visible]
        _fill(xy, 1.0 / d[visible], tri_colors[visible], tri_owners[visible],
              float(intrinsics.far_m), ids, depth, rgb)

    return FrameBuffers(rgb=rgb, ids=ids, depth=depth)


# ---------------------------------------------------------------------------
# Frame files

def _png_bytes(image: Image.Image) -> bytes:
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def write_frame_files(buffers: FrameBuffers, out_root, frame_id: str,
                      write_depth: bool = False) -> list[Path]:
    """Write ``<frame_id>.png`` (RGB), ``<frame_id>_id.png`` (16-bit object
    ids), and optionally ``<frame_id>_depth.f32`` (row-major float32 meters)
    under ``out_root``; byte-exact per frame_id."""
    base = Path(out_root) / frame_id
    if buffers.ids.max(initial=0) > 0xFFFF:
        raise ValueError("object ids exceed the 16-bit id PNG range")

    rgb_path = base.with_name(base.name + ".png")
    id_path = base.with_name(base.name + "_id.png")
    atomic_write_bytes(rgb_path, _png_bytes(Image.fromarray(buffers.rgb)))
    atomic_write_bytes(id_path, _png_bytes(
        Image.fromarray(buffers.ids.astype(np.uint16))))
    written = [rgb_path, id_path]
    if write_depth:
        depth_path = base.with_name(base.name + "_depth.f32")
        atomic_write_bytes(depth_path,
                           buffers.depth.astype(np.float32).tobytes())
        written.append(depth_path)
    return written


def read_rgb_png(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)


def read_id_png(path) -> np.ndarray:
    return np.asarray(Image.open(path), dtype=np.int32)
