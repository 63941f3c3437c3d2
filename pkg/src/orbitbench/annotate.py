"""Bounding-box annotation from object-id buffers.

Pixel coordinates: origin at the top-left, x right, y down.  Box centers
use pixel-index midpoints, so a box spanning columns 50..149 has
center_x 99.5 and width 100.

A box covers every pixel of its object id with no connected-component
splitting: a target split in two by an occluder still yields one box.
orientation_deg is (camera_azimuth - target_yaw) mod 360, so 0 means the
camera faces the target's front.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .fsio import atomic_write_text
from .geometry import FrameSpec
from .scene import SceneSpec

# JSON float fields are written with at most this many decimals; records
# are quantized at construction so write -> read round-trips exactly.
FLOAT_DECIMALS = 6


@dataclass(frozen=True)
class ObjectBox:
    """Tight box around all pixels of one object id, center format."""
    object_id: int
    object_label: str
    label_category: str
    bbox: tuple  # (center_x_px, center_y_px, width_px, height_px)
    pixel_count: int
    touches_border: bool


@dataclass(frozen=True)
class AnnotationRecord:
    frame_id: str
    object_id: int
    object_label: str
    label_category: str
    bbox: tuple
    pixel_count: int
    camera_altitude_m: float
    radius_m: float
    azimuth_deg: float
    sun: str
    pitch_deg: float
    distance_m: float
    orientation_deg: float
    touches_border: bool


_RECORD_FIELDS = tuple(AnnotationRecord.__dataclass_fields__)


def extract_boxes(id_buffer: np.ndarray, labels: dict) -> list[ObjectBox]:
    """Boxes for every nonzero id in the buffer, ascending by id.

    labels maps object_id -> (object_label, label_category); an id in the
    buffer without a label entry is an error (it means the scene and the
    render disagree).
    """
    ids = np.asarray(id_buffer)
    if ids.ndim != 2:
        raise ValueError("id buffer must be a 2-d array")
    height, width = ids.shape
    boxes = []
    for object_id in np.unique(ids):
        object_id = int(object_id)
        if object_id == 0:
            continue
        if object_id not in labels:
            raise ValueError(f"object id {object_id} present in buffer but "
                             "missing from the label map")
        rows, cols = np.nonzero(ids == object_id)
        min_x, max_x = int(cols.min()), int(cols.max())
        min_y, max_y = int(rows.min()), int(rows.max())
        label, category = labels[object_id]
        boxes.append(ObjectBox(
            object_id=object_id,
            object_label=label,
            label_category=category,
            bbox=((min_x + max_x) / 2.0, (min_y + max_y) / 2.0,
                  float(max_x - min_x + 1), float(max_y - min_y + 1)),
            pixel_count=int(len(rows)),
            touches_border=(min_x == 0 or min_y == 0
                            or max_x == width - 1 or max_y == height - 1),
        ))
    return boxes


def orientation_relative(target_yaw_deg: float, camera_azimuth_deg: float) -> float:
    return (camera_azimuth_deg - target_yaw_deg) % 360.0


def _r(x) -> float:
    return round(float(x), FLOAT_DECIMALS)


def annotate_frame(id_buffer: np.ndarray, frame: FrameSpec,
                   scene: SceneSpec) -> list[AnnotationRecord]:
    """One record per target with at least one visible pixel."""
    labels = {t.object_id: (t.label, t.category) for t in scene.targets}
    yaws = {t.object_id: t.yaw_deg for t in scene.targets}
    records = []
    for box in extract_boxes(id_buffer, labels):
        records.append(AnnotationRecord(
            frame_id=frame.frame_id,
            object_id=box.object_id,
            object_label=box.object_label,
            label_category=box.label_category,
            bbox=tuple(_r(v) for v in box.bbox),
            pixel_count=box.pixel_count,
            camera_altitude_m=_r(frame.altitude_m),
            radius_m=_r(frame.radius_m),
            azimuth_deg=_r(frame.azimuth_deg),
            sun=frame.sun,
            pitch_deg=_r(frame.pitch_deg),
            distance_m=_r(frame.distance_m),
            orientation_deg=_r(orientation_relative(yaws[box.object_id],
                                                    frame.azimuth_deg)),
            touches_border=box.touches_border,
        ))
    return records


def write_trial_json(records, path, trial: str) -> None:
    """Single trial document, records sorted by (frame_id, object_id)."""
    ordered = sorted(records, key=lambda r: (r.frame_id, r.object_id))
    lines = [json.dumps({**asdict(r), "bbox": list(r.bbox)},
                        separators=(", ", ": "))
             for r in ordered]
    if lines:
        text = '{"trial": %s, "frames": [\n%s\n]}\n' % (json.dumps(trial),
                                                        ",\n".join(lines))
    else:
        text = '{"trial": %s, "frames": []}\n' % json.dumps(trial)
    atomic_write_text(path, text)


_STRING_FIELDS = ("frame_id", "object_label", "label_category", "sun")
_FLOAT_FIELDS = ("camera_altitude_m", "radius_m", "azimuth_deg",
                 "pitch_deg", "distance_m", "orientation_deg")


def _check_record(raw: dict, index: int) -> AnnotationRecord:
    missing = [k for k in _RECORD_FIELDS if k not in raw]
    extra = [k for k in raw if k not in _RECORD_FIELDS]
    if missing or extra:
        raise ValueError(f"annotation record {index}: missing fields "
                         f"{missing}, unexpected fields {extra}")
    for key in _STRING_FIELDS:
        if not isinstance(raw[key], str):
            raise ValueError(f"annotation record {index}: {key} must be "
                             "a string")
    for key in _FLOAT_FIELDS:
        if not isinstance(raw[key], (int, float)) or isinstance(raw[key], bool):
            raise ValueError(f"annotation record {index}: {key} must be "
                             "a number")
    if not isinstance(raw["object_id"], int) or raw["object_id"] < 1:
        raise ValueError(f"annotation record {index}: object_id must be "
                         "a positive integer")
    if not isinstance(raw["touches_border"], bool):
        raise ValueError(f"annotation record {index}: touches_border must "
                         "be a boolean")
    bbox = raw["bbox"]
    if not (isinstance(bbox, list) and len(bbox) == 4
            and all(isinstance(v, (int, float)) for v in bbox)):
        raise ValueError(f"annotation record {index}: bbox must be "
                         "[center_x, center_y, width, height]")
    if bbox[2] < 1 or bbox[3] < 1:
        raise ValueError(f"annotation record {index}: width and height "
                         "must be >= 1 pixel")
    n = raw["pixel_count"]
    if not isinstance(n, int) or isinstance(n, bool) \
            or n < 1 or n > bbox[2] * bbox[3]:
        raise ValueError(f"annotation record {index}: pixel_count {n} "
                         "outside [1, width*height]")
    if not 0.0 <= raw["orientation_deg"] < 360.0:
        raise ValueError(f"annotation record {index}: orientation_deg "
                         "outside [0, 360)")
    return AnnotationRecord(**{**raw, "bbox": tuple(float(v) for v in bbox)})


def read_trial_json(path):
    """Parse and validate a trial document -> (trial_name, records)."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict) or "trial" not in doc or "frames" not in doc:
        raise ValueError(f"{path}: expected a trial document with "
                         '"trial" and "frames" keys')
    records = [_check_record(raw, i) for i, raw in enumerate(doc["frames"])]
    return doc["trial"], records
