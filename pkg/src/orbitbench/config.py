"""Run configuration: one JSON document drives generate, evaluate, and
report, so a trial's provenance is a single reviewable file.

Unknown keys anywhere in the document are rejected with their dotted path
(typo safety); all values are validated before any work starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .geometry import SweepConfig, default_trial_sweep
from .raster import CameraIntrinsics
from .scene import DEFAULT_SUN_TABLE, POSES, N_VARIANTS, IlluminationCondition


class ConfigError(Exception):
    """Configuration document is invalid; message carries the dotted key."""


@dataclass(frozen=True)
class SceneConfig:
    seed: int = 7
    pose: str = "standing"
    variant: int = 0
    target_yaw_deg: float = 0.0
    position_xy: tuple = (0.0, 0.0)
    chest_marker: bool = True
    terrain_extent_m: float = 512.0
    terrain_cell_m: float = 4.0
    sun_table: dict = field(default_factory=lambda: dict(DEFAULT_SUN_TABLE))


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.5
    boundary_threshold: float = 0.5
    h_split: float | None = None  # None: midpoint of the data's altitudes
    r_split: float | None = None  # None: midpoint of the data's radii
    bin_width_deg: float = 10.0
    ap_mode: str = "all_point"
    histogram_mode: str = "tp"


@dataclass(frozen=True)
class RunConfig:
    trial: str = "trial"
    output_dir: str = "out"
    workers: int = 0  # 0: decide from env/cpu at run time
    write_depth: bool = False
    # None: aim at the placed target's bounding-box center (per pose);
    # a number pins the camera look-at height explicitly.
    look_at_height_m: float | None = None
    sweep: SweepConfig = field(default_factory=default_trial_sweep)
    scene: SceneConfig = field(default_factory=SceneConfig)
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    eval: EvalConfig = field(default_factory=EvalConfig)


def _require(doc: dict, allowed, where: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        dotted = ", ".join(f"{where}.{k}" if where else k for k in unknown)
        raise ConfigError(f"unknown config key(s): {dotted}")


def _typed(doc: dict, key: str, kinds, where: str, default):
    if key not in doc:
        return default
    value = doc[key]
    if isinstance(value, bool) and bool not in (kinds if isinstance(kinds, tuple) else (kinds,)):
        raise ConfigError(f"{where}.{key}: expected {kinds}, got a boolean")
    if not isinstance(value, kinds):
        raise ConfigError(f"{where}.{key}: expected {kinds}, "
                          f"got {type(value).__name__}")
    return value


def _parse_sweep(doc: dict) -> SweepConfig:
    base = default_trial_sweep()
    _require(doc, ("altitudes_m", "radii_m", "azimuth_start_deg",
                   "azimuth_end_deg", "azimuth_step_deg", "sun_conditions"),
             "sweep")
    kwargs = {}
    for key in ("altitudes_m", "radii_m"):
        if key in doc:
            seq = doc[key]
            if not isinstance(seq, list) or not seq \
                    or not all(isinstance(v, (int, float))
                               and not isinstance(v, bool) for v in seq):
                raise ConfigError(f"sweep.{key}: expected a nonempty list "
                                  "of numbers")
            kwargs[key] = tuple(float(v) for v in seq)
    for key in ("azimuth_start_deg", "azimuth_end_deg", "azimuth_step_deg"):
        if key in doc:
            kwargs[key] = float(_typed(doc, key, (int, float), "sweep", None))
    if "sun_conditions" in doc:
        seq = doc["sun_conditions"]
        if not isinstance(seq, list) or not seq \
                or not all(isinstance(v, str) for v in seq):
            raise ConfigError("sweep.sun_conditions: expected a nonempty "
                              "list of names")
        kwargs["sun_conditions"] = tuple(seq)
    sweep = replace(base, **kwargs)
    try:
        sweep.validate()
    except ValueError as e:
        raise ConfigError(f"sweep: {e}") from e
    return sweep


def _parse_sun_table(doc: dict) -> dict:
    table = dict(DEFAULT_SUN_TABLE)
    for name, entry in doc.items():
        if not isinstance(entry, dict):
            raise ConfigError(f"scene.sun_table.{name}: expected an object")
        _require(entry, ("sun_elevation_deg", "sun_azimuth_deg",
                         "ambient_fraction"), f"scene.sun_table.{name}")
        base = table.get(name)
        cond = IlluminationCondition(
            name=name,
            sun_elevation_deg=float(entry.get(
                "sun_elevation_deg",
                base.sun_elevation_deg if base else 45.0)),
            sun_azimuth_deg=float(entry.get(
                "sun_azimuth_deg",
                base.sun_azimuth_deg if base else 180.0)),
            ambient_fraction=float(entry.get(
                "ambient_fraction",
                base.ambient_fraction if base else 0.3)))
        try:
            cond.validate()
        except ValueError as e:
            raise ConfigError(f"scene.sun_table.{name}: {e}") from e
        table[name] = cond
    return table


def _parse_scene(doc: dict) -> SceneConfig:
    _require(doc, ("seed", "pose", "variant", "target_yaw_deg",
                   "position_xy", "chest_marker", "terrain_extent_m",
                   "terrain_cell_m", "sun_table"), "scene")
    pose = _typed(doc, "pose", str, "scene", "standing")
    if pose not in POSES:
        raise ConfigError(f"scene.pose: {pose!r} not one of {POSES}")
    variant = _typed(doc, "variant", int, "scene", 0)
    if not 0 <= variant < N_VARIANTS:
        raise ConfigError(f"scene.variant: {variant} outside "
                          f"[0, {N_VARIANTS})")
    position = doc.get("position_xy", [0.0, 0.0])
    if not (isinstance(position, list) and len(position) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in position)):
        raise ConfigError("scene.position_xy: expected [x, y]")
    sun_table = doc.get("sun_table", {})
    if not isinstance(sun_table, dict):
        raise ConfigError("scene.sun_table: expected an object")
    return SceneConfig(
        seed=_typed(doc, "seed", int, "scene", 7),
        pose=pose,
        variant=variant,
        target_yaw_deg=float(_typed(doc, "target_yaw_deg", (int, float),
                                    "scene", 0.0)),
        position_xy=(float(position[0]), float(position[1])),
        chest_marker=_typed(doc, "chest_marker", bool, "scene", True),
        terrain_extent_m=float(_typed(doc, "terrain_extent_m", (int, float),
                                      "scene", 512.0)),
        terrain_cell_m=float(_typed(doc, "terrain_cell_m", (int, float),
                                    "scene", 4.0)),
        sun_table=_parse_sun_table(sun_table))


def _parse_intrinsics(doc: dict) -> CameraIntrinsics:
    _require(doc, ("width_px", "height_px", "vertical_fov_deg", "near_m",
                   "far_m"), "intrinsics")
    try:
        return CameraIntrinsics(
            width_px=_typed(doc, "width_px", int, "intrinsics", 512),
            height_px=_typed(doc, "height_px", int, "intrinsics", 512),
            vertical_fov_deg=float(_typed(doc, "vertical_fov_deg",
                                          (int, float), "intrinsics", 60.0)),
            near_m=float(_typed(doc, "near_m", (int, float), "intrinsics",
                                0.1)),
            far_m=float(_typed(doc, "far_m", (int, float), "intrinsics",
                               1000.0)))
    except ValueError as e:
        raise ConfigError(f"intrinsics: {e}") from e


def _parse_eval(doc: dict) -> EvalConfig:
    _require(doc, ("iou_threshold", "boundary_threshold", "h_split",
                   "r_split", "bin_width_deg", "ap_mode", "histogram_mode"),
             "eval")
    iou_threshold = float(_typed(doc, "iou_threshold", (int, float), "eval",
                                 0.5))
    if not 0.0 < iou_threshold <= 1.0:
        raise ConfigError("eval.iou_threshold: must lie in (0, 1]")
    boundary = float(_typed(doc, "boundary_threshold", (int, float), "eval",
                            0.5))
    if not 0.0 < boundary < 1.0:
        raise ConfigError("eval.boundary_threshold: must lie in (0, 1)")
    bin_width = float(_typed(doc, "bin_width_deg", (int, float), "eval",
                             10.0))
    if bin_width <= 0 or 360.0 % bin_width != 0:
        raise ConfigError(f"eval.bin_width_deg: {bin_width} does not "
                          "divide 360")
    ap_mode = _typed(doc, "ap_mode", str, "eval", "all_point")
    if ap_mode not in ("all_point", "11point"):
        raise ConfigError(f"eval.ap_mode: {ap_mode!r} not one of "
                          "('all_point', '11point')")
    hist_mode = _typed(doc, "histogram_mode", str, "eval", "tp")
    if hist_mode not in ("tp", "raw"):
        raise ConfigError(f"eval.histogram_mode: {hist_mode!r} not one of "
                          "('tp', 'raw')")
    splits = {}
    for key in ("h_split", "r_split"):
        value = doc.get(key)
        if value is not None and (not isinstance(value, (int, float))
                                  or isinstance(value, bool)):
            raise ConfigError(f"eval.{key}: expected a number or null")
        splits[key] = None if value is None else float(value)
    return EvalConfig(iou_threshold=iou_threshold,
                      boundary_threshold=boundary,
                      h_split=splits["h_split"], r_split=splits["r_split"],
                      bin_width_deg=bin_width, ap_mode=ap_mode,
                      histogram_mode=hist_mode)


def parse_run_config(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _require(doc, ("trial", "output_dir", "workers", "write_depth",
                   "look_at_height_m", "sweep", "scene", "intrinsics",
                   "eval"), "")
    for key in ("sweep", "scene", "intrinsics", "eval"):
        if key in doc and not isinstance(doc[key], dict):
            raise ConfigError(f"{key}: expected an object")
    workers = _typed(doc, "workers", int, "", 0)
    if workers < 0:
        raise ConfigError("workers: must be >= 0 (0 means auto)")
    look_at = doc.get("look_at_height_m")
    if look_at is not None and (not isinstance(look_at, (int, float))
                                or isinstance(look_at, bool)):
        raise ConfigError("look_at_height_m: expected a number or null")
    cfg = RunConfig(
        trial=_typed(doc, "trial", str, "", "trial"),
        output_dir=_typed(doc, "output_dir", str, "", "out"),
        workers=workers,
        write_depth=_typed(doc, "write_depth", bool, "", False),
        look_at_height_m=None if look_at is None else float(look_at),
        sweep=_parse_sweep(doc.get("sweep", {})),
        scene=_parse_scene(doc.get("scene", {})),
        intrinsics=_parse_intrinsics(doc.get("intrinsics", {})),
        eval=_parse_eval(doc.get("eval", {})))
    missing = [s for s in cfg.sweep.sun_conditions
               if s not in cfg.scene.sun_table]
    if missing:
        raise ConfigError("sweep.sun_conditions not covered by "
                          f"scene.sun_table: {missing}")
    return cfg


def load_run_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON at line {e.lineno}: "
                          f"{e.msg}") from e
    return parse_run_config(doc)
