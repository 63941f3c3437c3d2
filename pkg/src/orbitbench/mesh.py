"""Triangle meshes and the primitive builders used to assemble targets.

Meshes are plain vertex/face arrays with one flat color per face.  All
primitives are built watertight with outward-facing (counterclockwise when
seen from outside) winding, which the flat Lambert shading relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class TriangleMesh:
    vertices: np.ndarray     # (n, 3) float64
    faces: np.ndarray        # (m, 3) int32, indices into vertices
    face_colors: np.ndarray  # (m, 3) float64, linear RGB in [0, 1]

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int32).reshape(-1, 3)
        self.face_colors = np.asarray(self.face_colors, dtype=np.float64).reshape(-1, 3)
        if len(self.face_colors) != len(self.faces):
            raise ValueError("face_colors must have one entry per face")

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned (min, max) corners of the vertex set."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def extents(self) -> np.ndarray:
        lo, hi = self.bounds()
        return hi - lo

    def face_normals(self) -> np.ndarray:
        """Unit normals per face (zero-area faces get a zero vector)."""
        v = self.vertices[self.faces]
        n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, length, out=np.zeros_like(n), where=length > 0)

    def transformed(self, yaw_deg: float = 0.0, translation=(0.0, 0.0, 0.0),
                    scale: float = 1.0) -> "TriangleMesh":
        """Scaled, yawed (about +z), then translated copy."""
        c = math.cos(math.radians(yaw_deg))
        s = math.sin(math.radians(yaw_deg))
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        verts = (self.vertices * scale) @ rot.T + np.asarray(translation, dtype=np.float64)
        return TriangleMesh(verts, self.faces.copy(), self.face_colors.copy())


def merge(meshes: list[TriangleMesh]) -> TriangleMesh:
    """Concatenate meshes into one, re-offsetting face indices."""
    verts, faces, colors = [], [], []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        colors.append(m.face_colors)
        offset += len(m.vertices)
    return TriangleMesh(np.vstack(verts), np.vstack(faces), np.vstack(colors))


def _uniform_colors(n_faces: int, color) -> np.ndarray:
    return np.tile(np.asarray(color, dtype=np.float64), (n_faces, 1))


def box(lo, hi, color) -> TriangleMesh:
    """Axis-aligned box from corner ``lo`` to corner ``hi`` (12 triangles)."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    verts = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ])
    faces = np.array([
        [0, 2, 1], [0, 3, 2],  # bottom (-z)
        [4, 5, 6], [4, 6, 7],  # top (+z)
        [0, 1, 5], [0, 5, 4],  # front (-y)
        [2, 3, 7], [2, 7, 6],  # back (+y)
        [1, 2, 6], [1, 6, 5],  # right (+x)
        [3, 0, 4], [3, 4, 7],  # left (-x)
    ], dtype=np.int32)
    return TriangleMesh(verts, faces, _uniform_colors(len(faces), color))


def uv_sphere(center, radius: float, color, n_lat: int = 9, n_lon: int = 16) -> TriangleMesh:
    """Latitude/longitude sphere with pole fans; watertight."""
    center = np.asarray(center, dtype=np.float64)
    verts = [center + np.array([0.0, 0.0, radius])]
    for i in range(1, n_lat):
        theta = math.pi * i / n_lat
        z = radius * math.cos(theta)
        rho = radius * math.sin(theta)
        for j in range(n_lon):
            phi = 2.0 * math.pi * j / n_lon
            verts.append(center + np.array([rho * math.cos(phi), rho * math.sin(phi), z]))
    verts.append(center + np.array([0.0, 0.0, -radius]))
    verts = np.array(verts)

    def ring(i, j):
        return 1 + (i - 1) * n_lon + (j % n_lon)

    faces = []
    for j in range(n_lon):
        faces.append([0, ring(1, j), ring(1, j + 1)])
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            faces.append([a, c, d])
            faces.append([a, d, b])
    south = len(verts) - 1
    for j in range(n_lon):
        faces.append([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)])
    faces = np.array(faces, dtype=np.int32)
    return TriangleMesh(verts, faces, _uniform_colors(len(faces), color))


def capsule(p0, p1, radius: float, color, n_lon: int = 16, n_cap: int = 4) -> TriangleMesh:
    """Capsule with hemispherical cap centers at ``p0`` and ``p1``.

    Total length along the axis is ``|p1 - p0| + 2 * radius``.  The axis may
    point in any direction.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    if length <= 1e-12:
        return uv_sphere(p0, radius, color, n_lat=2 * n_cap, n_lon=n_lon)
    axis = axis / length

    # Orthonormal frame around the axis.
    helper = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(axis, helper)) > 0.99:
        helper = np.array([1.0, 0.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)

    # Rings from the p1 pole over the top cap (ending at the p1 equator),
    # then the p0 equator, then over the bottom cap toward the p0 pole.
    # The generic band faces between consecutive rings form the cylinder.
    verts = [p1 + radius * axis]
    rings = []
    for i in range(1, n_cap + 1):
        theta = (math.pi / 2.0) * i / n_cap
        rings.append((p1, radius * math.sin(theta), radius * math.cos(theta)))
    for i in range(n_cap):
        theta = (math.pi / 2.0) * i / n_cap
        rings.append((p0, radius * math.cos(theta), -radius * math.sin(theta)))
    for center, rho, along in rings:
        for j in range(n_lon):
            phi = 2.0 * math.pi * j / n_lon
            verts.append(center + along * axis
                         + rho * (math.cos(phi) * u + math.sin(phi) * w))
    verts.append(p0 - radius * axis)
    verts = np.array(verts)

    n_rings = len(rings)

    def ring(i, j):
        return 1 + i * n_lon + (j % n_lon)

    faces = []
    for j in range(n_lon):
        faces.append([0, ring(0, j), ring(0, j + 1)])
    for i in range(n_rings - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            faces.append([a, c, d])
            faces.append([a, d, b])
    south = len(verts) - 1
    for j in range(n_lon):
        faces.append([south, ring(n_rings - 1, j + 1), ring(n_rings - 1, j)])
    faces = np.array(faces, dtype=np.int32)
    return TriangleMesh(verts, faces, _uniform_colors(len(faces), color))


def is_watertight(mesh: TriangleMesh) -> bool:
    """Every undirected edge is shared by exactly two faces with opposite
    direction — the closed-surface check used by the scene tests."""
    directed: dict[tuple[int, int], int] = {}
    for a, b, c in mesh.faces:
        for e in ((a, b), (b, c), (c, a)):
            directed[e] = directed.get(e, 0) + 1
    for (a, b), count in directed.items():
        if count != 1 or directed.get((b, a), 0) != 1:
            return False
    return True
