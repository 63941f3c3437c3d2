"""Run orchestration: render a sweep to disk, score a prediction file,
and turn results into report artifacts.

Generation parallelizes over frames with forked workers.  Every frame is
rendered and annotated independently, keyed by frame_id, and the trial
annotation file is written from the sorted union, so output bytes do not
depend on the worker count or scheduling order.
"""

from __future__ import annotations

import json
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from .annotate import annotate_frame, write_trial_json
from .config import EvalConfig, RunConfig
from .evaluation import (AngularHistogram, APGrid, angular_histogram,
                         bin_by_height_radius, boundary_map,
                         match_predictions, region_summary)
from .fsio import atomic_write_text
from .geometry import enumerate_sweep
from .raster import render, write_frame_files
from .report import (ReportBundle, emit_angular_svg, emit_ap_grid_csv,
                     emit_heatmap_svg, write_manifest)
from .scene import build_scene

_BATCH_FRAMES = 32

# Generation context inherited by forked workers; set before the pool
# starts and never mutated afterwards.
_CTX = None


def _build_scenes(cfg: RunConfig) -> dict:
    sc = cfg.scene
    base = build_scene(seed=sc.seed, pose=sc.pose, variant=sc.variant,
                       yaw_deg=sc.target_yaw_deg,
                       sun=cfg.sweep.sun_conditions[0],
                       position_xy=sc.position_xy,
                       terrain_extent_m=sc.terrain_extent_m,
                       terrain_cell_m=sc.terrain_cell_m,
                       chest_marker=sc.chest_marker,
                       sun_table=sc.sun_table)
    return {name: base.with_sun(sc.sun_table[name])
            for name in cfg.sweep.sun_conditions}


def _render_batch(frames) -> list:
    cfg, scenes, frames_dir = _CTX
    records = []
    for frame in frames:
        scene = scenes[frame.sun]
        buffers = render(scene, frame.camera, cfg.intrinsics)
        write_frame_files(buffers, frames_dir, frame.frame_id,
                          write_depth=cfg.write_depth)
        records.extend(annotate_frame(buffers.ids, frame, scene))
    return records


def _scene_provenance(cfg: RunConfig, sweep, scenes: dict,
                      n_frames: int) -> dict:
    any_scene = next(iter(scenes.values()))
    return {
        "trial": cfg.trial,
        "n_frames": n_frames,
        "sweep": {
            "altitudes_m": list(sweep.altitudes_m),
            "radii_m": list(sweep.radii_m),
            "azimuth_start_deg": sweep.azimuth_start_deg,
            "azimuth_end_deg": sweep.azimuth_end_deg,
            "azimuth_step_deg": sweep.azimuth_step_deg,
            "sun_conditions": list(sweep.sun_conditions),
            "look_at_height_m": sweep.look_at_height_m,
        },
        "intrinsics": asdict(cfg.intrinsics),
        "terrain": {
            "seed": cfg.scene.seed,
            "extent_m": cfg.scene.terrain_extent_m,
            "cell_m": cfg.scene.terrain_cell_m,
            "flat_radius_m": any_scene.terrain.flat_radius_m,
            "amplitude_m": any_scene.terrain.amplitude_m,
        },
        "sun_table": {name: asdict(cond)
                      for name, cond in sorted(cfg.scene.sun_table.items())},
        "targets": [{
            "object_id": t.object_id,
            "label": t.label,
            "category": t.category,
            "pose": t.pose,
            "variant": t.variant,
            "yaw_deg": t.yaw_deg,
            "position": [float(v) for v in t.position],
            "chest_marker": cfg.scene.chest_marker,
        } for t in any_scene.targets],
    }


def generate_trial(cfg: RunConfig, workers: int = 1, progress=None) -> dict:
    """Render every frame of the sweep and write the trial annotation file.

    Returns paths of the artifacts written.  progress, when given, is
    called as progress(frames_done, frames_total) after every batch.
    """
    global _CTX
    out_root = Path(cfg.output_dir)
    frames_dir = out_root / "frames"
    trial_dir = out_root / cfg.trial
    trial_dir.mkdir(parents=True, exist_ok=True)

    scenes = _build_scenes(cfg)
    # aim at the target's bbox center unless the config pins a height
    z_c = cfg.look_at_height_m
    if z_c is None:
        any_scene = next(iter(scenes.values()))
        z_c = float(any_scene.targets[0].world_bbox_center()[2])
    sweep = replace(cfg.sweep, look_at_height_m=z_c)
    frames = list(enumerate_sweep(sweep, trial=cfg.trial))
    batches = [frames[i:i + _BATCH_FRAMES]
               for i in range(0, len(frames), _BATCH_FRAMES)]

    _CTX = (cfg, scenes, frames_dir)
    records = []
    done = 0
    if workers <= 1:
        for batch in batches:
            records.extend(_render_batch(batch))
            done += len(batch)
            if progress:
                progress(done, len(frames))
    else:
        # fork so workers inherit _CTX and any warm JIT state
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers,
                                 mp_context=ctx) as pool:
            for batch, out in zip(batches,
                                  pool.map(_render_batch, batches)):
                records.extend(out)
                done += len(batch)
                if progress:
                    progress(done, len(frames))

    annotations_path = trial_dir / "annotations.json"
    write_trial_json(records, annotations_path, trial=cfg.trial)
    scene_path = trial_dir / "scene.json"
    atomic_write_text(scene_path,
                      json.dumps(_scene_provenance(cfg, sweep, scenes,
                                                   len(frames)),
                                 indent=2, sort_keys=True) + "\n")
    return {"trial_dir": trial_dir, "frames_dir": frames_dir,
            "annotations": annotations_path, "scene": scene_path,
            "n_frames": len(frames), "n_records": len(records)}


# ---------------------------------------------------------------------------
# Evaluation results document

def _grid_doc(grid: APGrid) -> dict:
    return {"altitudes": list(grid.altitudes), "radii": list(grid.radii),
            "cells": [list(row) for row in grid.cells],
            "map": grid.map_value}


def grid_from_doc(doc: dict) -> APGrid:
    return APGrid(altitudes=tuple(doc["altitudes"]),
                  radii=tuple(doc["radii"]),
                  cells=tuple(tuple(row) for row in doc["cells"]))


def _hist_doc(hist: AngularHistogram) -> dict:
    return {"bin_width_deg": hist.bin_width_deg, "mode": hist.mode,
            "counts": list(hist.counts)}


def hist_from_doc(doc: dict) -> AngularHistogram:
    return AngularHistogram(bin_width_deg=doc["bin_width_deg"],
                            counts=tuple(doc["counts"]), mode=doc["mode"])


def _midpoint(values) -> float:
    return (min(values) + max(values)) / 2.0


def evaluate_run(annotations, predictions, cfg: EvalConfig) -> dict:
    """Match, bin, and summarize; returns the results document."""
    result = match_predictions(predictions, annotations, cfg.iou_threshold)

    altitudes = sorted({a.camera_altitude_m for a in annotations})
    radii = sorted({a.radius_m for a in annotations})
    h_split = cfg.h_split if cfg.h_split is not None else (
        _midpoint(altitudes) if altitudes else 0.0)
    r_split = cfg.r_split if cfg.r_split is not None else (
        _midpoint(radii) if radii else 0.0)

    grid = bin_by_height_radius(annotations, result, ap_mode=cfg.ap_mode)
    suns = sorted({a.sun for a in annotations})
    per_sun = {s: _grid_doc(bin_by_height_radius(annotations, result, sun=s,
                                                 ap_mode=cfg.ap_mode))
               for s in suns}

    def hist(**kw):
        return _hist_doc(angular_histogram(
            annotations, result, bin_width_deg=cfg.bin_width_deg,
            mode=cfg.histogram_mode, h_split=h_split, r_split=r_split, **kw))

    any_defined = any(ap is not None for row in grid.cells for ap in row)
    boundary = None
    if any_defined:
        bm = boundary_map(grid, cfg.boundary_threshold)
        boundary = {
            "threshold": bm.threshold,
            "boundary_cells": [list(c) for c in sorted(bm.boundary_cells)],
            "usable_envelope": list(bm.usable_envelope),
        }

    return {
        "config": {
            "iou_threshold": cfg.iou_threshold,
            "ap_mode": cfg.ap_mode,
            "histogram_mode": cfg.histogram_mode,
            "boundary_threshold": cfg.boundary_threshold,
            "h_split": h_split,
            "r_split": r_split,
            "bin_width_deg": cfg.bin_width_deg,
        },
        "n_annotations": len(annotations),
        "n_predictions": len(predictions),
        "n_true_positives": sum(m.is_tp for m in result.matches),
        "ap_grid": _grid_doc(grid),
        "ap_grid_per_sun": per_sun,
        "angular": hist(),
        "angular_nadir": hist(region="NadirView"),
        "angular_outside_nadir": hist(region="OutsideNadir"),
        "boundary": boundary,
        "regions": region_summary(annotations, result, h_split=h_split,
                                  r_split=r_split, ap_mode=cfg.ap_mode),
    }


def write_results(results: dict, path) -> None:
    atomic_write_text(path, json.dumps(results, indent=1, sort_keys=True)
                      + "\n")


_RESULT_KEYS = ("config", "n_annotations", "n_predictions",
                "n_true_positives", "ap_grid", "ap_grid_per_sun", "angular",
                "angular_nadir", "angular_outside_nadir", "boundary",
                "regions")


def read_results(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except FileNotFoundError as e:
        raise ValueError(f"results file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: malformed JSON at line {e.lineno}: "
                         f"{e.msg}") from e
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: results document must be an object")
    missing = [k for k in _RESULT_KEYS if k not in doc]
    if missing:
        raise ValueError(f"{path}: results document missing keys {missing}")
    return doc


def _fmt_map(value) -> str:
    return "" if value is None else f"{value:.4f}"


def report_run(results: dict, out_dir) -> ReportBundle:
    """Emit CSV/SVG artifacts plus summary and manifest from a results
    document; byte-identical on rerun."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h_split = results["config"]["h_split"]
    r_split = results["config"]["r_split"]

    written = []
    grid = grid_from_doc(results["ap_grid"])
    written.append(emit_ap_grid_csv(grid, out_dir / "ap_grid.csv"))
    written.append(emit_heatmap_svg(grid, out_dir / "heatmap.svg",
                                    h_split=h_split, r_split=r_split))
    written.append(emit_angular_svg(hist_from_doc(results["angular"]),
                                    out_dir / "angular.svg"))
    summary = ["scope,mAP", f"overall,{_fmt_map(grid.map_value)}"]
    for sun in sorted(results["ap_grid_per_sun"]):
        sun_grid = grid_from_doc(results["ap_grid_per_sun"][sun])
        written.append(emit_ap_grid_csv(sun_grid,
                                        out_dir / f"ap_grid_{sun}.csv"))
        written.append(emit_heatmap_svg(sun_grid,
                                        out_dir / f"heatmap_{sun}.svg",
                                        h_split=h_split, r_split=r_split))
        summary.append(f"{sun},{_fmt_map(sun_grid.map_value)}")
    written.append(atomic_write_text(out_dir / "summary.csv",
                                     "\n".join(summary) + "\n"))
    return write_manifest(out_dir, written)
