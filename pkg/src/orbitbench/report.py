"""Plain-text report artifacts: AP grid CSV, heatmap SVG, polar angular
histogram SVG, and a hashed manifest.

Everything here is deterministic: no timestamps, fixed float formatting,
files listed and hashed in sorted order.  Identical inputs produce
byte-identical artifacts, which is what the end-to-end determinism checks
diff against.

Heatmap color ramp: AP 0 maps to #b2182b (red), AP 1 to #2166ac (blue),
linear per RGB channel; cells without data are drawn in #cccccc.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .evaluation import AngularHistogram, APGrid
from .fsio import atomic_write_text

RAMP_LOW = (0xB2, 0x18, 0x2B)
RAMP_HIGH = (0x21, 0x66, 0xAC)
NO_DATA_FILL = "#cccccc"

CELL_PX = 48
MARGIN_PX = 56


def _ap_color(ap: float) -> str:
    t = min(max(ap, 0.0), 1.0)
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(RAMP_LOW, RAMP_HIGH))
    return f"#{r:02x}{g:02x}{b:02x}"


def _axis(value: float) -> str:
    return f"{value:g}"


def emit_ap_grid_csv(grid: APGrid, path) -> Path:
    """Radius columns, altitude rows, 4-decimal cells, empty for no data,
    trailing "mAP,<value>" summary line."""
    lines = ["altitude_m\\radius_m," + ",".join(_axis(r) for r in grid.radii)]
    for h, row in zip(grid.altitudes, grid.cells):
        cells = ["" if ap is None else f"{ap:.4f}" for ap in row]
        lines.append(_axis(h) + "," + ",".join(cells))
    map_value = grid.map_value
    lines.append("mAP," + ("" if map_value is None else f"{map_value:.4f}"))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_ap_grid_csv(path) -> APGrid:
    """Inverse of emit_ap_grid_csv up to 4-decimal quantization."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 2 or not lines[-1].startswith("mAP,"):
        raise ValueError(f"{path}: not an AP grid CSV")
    radii = tuple(float(v) for v in lines[0].split(",")[1:])
    altitudes, rows = [], []
    for line in lines[1:-1]:
        fields = line.split(",")
        if len(fields) != len(radii) + 1:
            raise ValueError(f"{path}: row width does not match header")
        altitudes.append(float(fields[0]))
        rows.append(tuple(None if v == "" else float(v)
                          for v in fields[1:]))
    return APGrid(altitudes=tuple(altitudes), radii=radii, cells=tuple(rows))


def _svg(width, height, body: list) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    return "\n".join([head] + body + ["</svg>"]) + "\n"


def emit_heatmap_svg(grid: APGrid, path, h_split=None, r_split=None) -> Path:
    """One rect per grid cell plus optional quadrant split lines.

    Rows run low altitude at the top; split lines are positioned by
    linear interpolation between cell centers along each axis.
    """
    n_rows, n_cols = len(grid.altitudes), len(grid.radii)
    width = MARGIN_PX * 2 + n_cols * CELL_PX
    height = MARGIN_PX * 2 + n_rows * CELL_PX
    body = [f'<rect x="0" y="0" width="{width}" height="{height}" '
            'fill="#ffffff"/>']
    for i, h in enumerate(grid.altitudes):
        for j, r in enumerate(grid.radii):
            ap = grid.cells[i][j]
            fill = NO_DATA_FILL if ap is None else _ap_color(ap)
            x = MARGIN_PX + j * CELL_PX
            y = MARGIN_PX + i * CELL_PX
            body.append(f'<rect class="cell" x="{x}" y="{y}" '
                        f'width="{CELL_PX}" height="{CELL_PX}" '
                        f'fill="{fill}" stroke="#ffffff"/>')
    for j, r in enumerate(grid.radii):
        x = MARGIN_PX + j * CELL_PX + CELL_PX // 2
        body.append(f'<text x="{x}" y="{MARGIN_PX - 10}" font-size="12" '
                    f'text-anchor="middle">{_axis(r)}</text>')
    for i, h in enumerate(grid.altitudes):
        y = MARGIN_PX + i * CELL_PX + CELL_PX // 2 + 4
        body.append(f'<text x="{MARGIN_PX - 10}" y="{y}" font-size="12" '
                    f'text-anchor="end">{_axis(h)}</text>')
    body.append(f'<text x="{width / 2:g}" y="{MARGIN_PX - 30}" '
                'font-size="13" text-anchor="middle">radius_m</text>')
    body.append(f'<text x="14" y="{height / 2:g}" font-size="13" '
                f'text-anchor="middle" transform="rotate(-90 14 '
                f'{height / 2:g})">altitude_m</text>')

    def axis_pos(values, split, origin):
        # fractional cell index of the split value via cell-center interpolation
        centers = list(values)
        if split <= centers[0]:
            idx = 0.0
        elif split >= centers[-1]:
            idx = float(len(centers))
        else:
            k = max(i for i, c in enumerate(centers) if c <= split)
            frac = (split - centers[k]) / (centers[k + 1] - centers[k])
            idx = k + 0.5 + frac
        return origin + idx * CELL_PX

    if r_split is not None and n_cols > 1:
        x = axis_pos(grid.radii, r_split, MARGIN_PX)
        body.append(f'<line class="split" x1="{x:.2f}" y1="{MARGIN_PX}" '
                    f'x2="{x:.2f}" y2="{MARGIN_PX + n_rows * CELL_PX}" '
                    'stroke="#000000" stroke-width="2" '
                    'stroke-dasharray="6 3"/>')
    if h_split is not None and n_rows > 1:
        y = axis_pos(grid.altitudes, h_split, MARGIN_PX)
        body.append(f'<line class="split" x1="{MARGIN_PX}" y1="{y:.2f}" '
                    f'x2="{MARGIN_PX + n_cols * CELL_PX}" y2="{y:.2f}" '
                    'stroke="#000000" stroke-width="2" '
                    'stroke-dasharray="6 3"/>')
    return atomic_write_text(path, _svg(width, height, body))


def emit_angular_svg(hist: AngularHistogram, path, radius_px=180) -> Path:
    """Polar bar chart: one wedge per azimuth bin, radial length
    proportional to count, azimuth 0 at +x growing counterclockwise."""
    size = radius_px * 2 + MARGIN_PX * 2
    c = size / 2.0
    peak = max(hist.counts) if hist.counts else 0
    body = [f'<rect x="0" y="0" width="{size}" height="{size}" '
            'fill="#ffffff"/>',
            f'<circle cx="{c:g}" cy="{c:g}" r="{radius_px}" fill="none" '
            'stroke="#999999"/>']

    def polar(angle_deg, r):
        a = math.radians(angle_deg)
        return c + r * math.cos(a), c - r * math.sin(a)

    for k, count in enumerate(hist.counts):
        r = 0.0 if peak == 0 else radius_px * count / peak
        a0 = k * hist.bin_width_deg
        a1 = (k + 1) * hist.bin_width_deg
        x0, y0 = polar(a0, r)
        x1, y1 = polar(a1, r)
        large = 1 if hist.bin_width_deg > 180 else 0
        body.append(f'<path class="wedge" d="M {c:.2f} {c:.2f} '
                    f'L {x0:.2f} {y0:.2f} '
                    f'A {r:.2f} {r:.2f} 0 {large} 0 {x1:.2f} {y1:.2f} Z" '
                    'fill="#2166ac" fill-opacity="0.8" stroke="#ffffff" '
                    'stroke-width="0.5"/>')
    for angle in (0, 90, 180, 270):
        x, y = polar(angle, radius_px + 16)
        body.append(f'<text x="{x:.2f}" y="{y + 4:.2f}" font-size="12" '
                    f'text-anchor="middle">{angle}</text>')
    return atomic_write_text(path, _svg(size, size, body))


@dataclass(frozen=True)
class ReportBundle:
    out_dir: Path
    files: tuple  # (relative name, sha256 hex) sorted by name

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / "manifest.json"


def write_manifest(out_dir, paths) -> ReportBundle:
    """Hash the given artifacts and write manifest.json next to them."""
    out_dir = Path(out_dir)
    entries = []
    for p in paths:
        p = Path(p)
        digest = hashlib.sha256(p.read_bytes()).hexdigest()
        entries.append((p.relative_to(out_dir).as_posix(), digest))
    entries.sort()
    doc = {"files": [{"name": name, "sha256": digest}
                     for name, digest in entries]}
    atomic_write_text(out_dir / "manifest.json",
                      json.dumps(doc, indent=2) + "\n")
    return ReportBundle(out_dir=out_dir, files=tuple(entries))
