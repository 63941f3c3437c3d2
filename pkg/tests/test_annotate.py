import json

import numpy as np
import pytest

from orbitbench.annotate import (AnnotationRecord, annotate_frame,
                                 extract_boxes, orientation_relative,
                                 read_trial_json, write_trial_json)
from orbitbench.geometry import SweepConfig, enumerate_sweep, pitch_and_distance
from orbitbench.raster import render
from orbitbench.scene import build_scene

LABELS = {1: ("person", "person"), 2: ("person", "person"),
          3: ("person", "person")}


def scan_boxes(ids):
    """Independent pixel-by-pixel scan: id -> (bbox, pixel_count, touches).

    Pure Python, no vectorized shortcuts shared with the implementation.
    """
    height = len(ids.tolist())
    width = len(ids.tolist()[0])
    stats = {}
    for y, row in enumerate(ids.tolist()):
        for x, v in enumerate(row):
            if v == 0:
                continue
            s = stats.get(v)
            if s is None:
                stats[v] = [x, x, y, y, 1]
            else:
                s[0] = min(s[0], x)
                s[1] = max(s[1], x)
                s[2] = min(s[2], y)
                s[3] = max(s[3], y)
                s[4] += 1
    out = {}
    for v, (x0, x1, y0, y1, n) in stats.items():
        bbox = ((x0 + x1) / 2.0, (y0 + y1) / 2.0,
                float(x1 - x0 + 1), float(y1 - y0 + 1))
        touches = x0 == 0 or y0 == 0 or x1 == width - 1 or y1 == height - 1
        out[v] = (bbox, n, touches)
    return out


# ---------------------------------------------------------------------------
# Box extraction

def test_solid_block_box():
    ids = np.zeros((512, 512), dtype=np.int32)
    ids[100:200, 50:150] = 1
    (box,) = extract_boxes(ids, LABELS)
    assert box.bbox == (99.5, 149.5, 100.0, 100.0)
    assert box.pixel_count == 10000
    assert not box.touches_border


def test_empty_buffer_gives_no_boxes():
    assert extract_boxes(np.zeros((64, 64), dtype=np.int32), LABELS) == []


def test_single_pixel_box():
    ids = np.zeros((16, 16), dtype=np.int32)
    ids[3, 7] = 2
    (box,) = extract_boxes(ids, LABELS)
    assert box.object_id == 2
    assert box.bbox == (7.0, 3.0, 1.0, 1.0)
    assert box.pixel_count == 1


def test_border_contact_flag():
    ids = np.zeros((16, 16), dtype=np.int32)
    ids[5:8, 0:3] = 1
    (box,) = extract_boxes(ids, LABELS)
    assert box.touches_border


def test_split_object_gets_one_covering_box():
    # occlusion can cut a target in two; the box still spans both parts
    ids = np.zeros((32, 32), dtype=np.int32)
    ids[10:12, 4:8] = 1
    ids[10:12, 20:24] = 1
    (box,) = extract_boxes(ids, LABELS)
    assert box.bbox == (13.5, 10.5, 20.0, 2.0)
    assert box.pixel_count == 16


def test_multiple_ids_ascending_order():
    ids = np.zeros((32, 32), dtype=np.int32)
    ids[2:6, 2:6] = 3
    ids[20:25, 10:18] = 1
    boxes = extract_boxes(ids, LABELS)
    assert [b.object_id for b in boxes] == [1, 3]


def test_unlabeled_id_is_an_error():
    ids = np.zeros((8, 8), dtype=np.int32)
    ids[1, 1] = 9
    with pytest.raises(ValueError, match="object id 9"):
        extract_boxes(ids, LABELS)


def test_non_2d_buffer_rejected():
    with pytest.raises(ValueError):
        extract_boxes(np.zeros((4, 4, 3), dtype=np.int32), LABELS)


def test_boxes_match_pixel_scan_on_random_buffers():
    rng = np.random.default_rng(11)
    for _ in range(25):
        ids = rng.integers(0, 4, size=(40, 50)).astype(np.int32)
        # sprinkle zeros so ids are sparse in some iterations
        ids[rng.random(ids.shape) < rng.random()] = 0
        expected = scan_boxes(ids)
        boxes = extract_boxes(ids, LABELS)
        assert [b.object_id for b in boxes] == sorted(expected)
        for b in boxes:
            bbox, count, touches = expected[b.object_id]
            assert b.bbox == bbox
            assert b.pixel_count == count
            assert b.touches_border == touches


def test_boxes_match_pixel_scan_on_rendered_frame():
    scene = build_scene(seed=7, pose="squatting", variant=2, sun="noon")
    frame = sweep_frame(altitude_m=15.0, radius_m=10.0, azimuth_deg=70.0)
    ids = render(scene, frame.camera).ids
    expected = scan_boxes(ids)
    assert set(expected) == {1}
    (box,) = extract_boxes(ids, {1: ("person", "person")})
    bbox, count, touches = expected[1]
    assert box.bbox == bbox
    assert box.pixel_count == count
    assert box.touches_border == touches


# ---------------------------------------------------------------------------
# Orientation

@pytest.mark.parametrize("yaw,azimuth,expected", [
    (0.0, 0.0, 0.0),
    (0.0, 180.0, 180.0),
    (90.0, 30.0, 300.0),
    (350.0, 10.0, 20.0),
])
def test_orientation_relative(yaw, azimuth, expected):
    assert orientation_relative(yaw, azimuth) == expected


# ---------------------------------------------------------------------------
# Frame annotation

def sweep_frame(altitude_m, radius_m, azimuth_deg, sun="noon"):
    config = SweepConfig(altitudes_m=(altitude_m,), radii_m=(radius_m,),
                         azimuth_start_deg=azimuth_deg,
                         azimuth_end_deg=azimuth_deg,
                         azimuth_step_deg=1.0,
                         sun_conditions=(sun,),
                         look_at_height_m=0.9)
    (frame,) = enumerate_sweep(config, trial="t")
    return frame


def test_annotate_frame_record_contents():
    yaw = 25.0
    scene = build_scene(seed=7, pose="standing", yaw_deg=yaw, sun="noon")
    frame = sweep_frame(altitude_m=25.0, radius_m=20.0, azimuth_deg=45.0)
    buffers = render(scene, frame.camera)
    (record,) = annotate_frame(buffers.ids, frame, scene)

    assert record.frame_id == frame.frame_id
    assert record.object_id == 1
    assert record.object_label == "person"
    assert record.label_category == "person"
    assert record.sun == "noon"
    assert record.camera_altitude_m == 25.0
    assert record.radius_m == 20.0
    assert record.azimuth_deg == 45.0
    pitch, dist = pitch_and_distance(20.0, 25.0, 0.9)
    assert record.pitch_deg == pytest.approx(pitch, abs=1e-6)
    assert record.distance_m == pytest.approx(dist, abs=1e-6)
    assert record.orientation_deg == (45.0 - yaw) % 360.0
    assert not record.touches_border

    (box,) = extract_boxes(buffers.ids, scene.label_map())
    assert record.bbox == box.bbox
    assert record.pixel_count == box.pixel_count


def test_annotate_frame_empty_buffer():
    scene = build_scene(seed=7, sun="noon")
    frame = sweep_frame(25.0, 20.0, 0.0)
    assert annotate_frame(np.zeros((8, 8), dtype=np.int32), frame, scene) == []


# ---------------------------------------------------------------------------
# Trial JSON

def make_record(frame_id="t/0/h025.0_r020.0_a045.0", object_id=1, **over):
    base = dict(
        frame_id=frame_id, object_id=object_id, object_label="person",
        label_category="person", bbox=(99.5, 149.5, 100.0, 100.0),
        pixel_count=10000, camera_altitude_m=25.0, radius_m=20.0,
        azimuth_deg=45.0, sun="noon", pitch_deg=50.310257,
        distance_m=31.320121, orientation_deg=20.0, touches_border=False,
    )
    base.update(over)
    return AnnotationRecord(**base)


def test_trial_json_round_trip(tmp_path):
    records = [make_record(azimuth_deg=float(a), orientation_deg=float(a))
               for a in range(0, 350, 37)]
    path = tmp_path / "annotations.json"
    write_trial_json(records, path, "t")
    trial, loaded = read_trial_json(path)
    assert trial == "t"
    assert loaded == sorted(records, key=lambda r: (r.frame_id, r.object_id))


def test_trial_json_sorts_records(tmp_path):
    records = [make_record(frame_id="t/0/h025.0_r020.0_a090.0", object_id=2),
               make_record(frame_id="t/0/h025.0_r020.0_a090.0", object_id=1),
               make_record(frame_id="t/0/h005.0_r020.0_a000.0")]
    path = tmp_path / "annotations.json"
    write_trial_json(records, path, "t")
    _, loaded = read_trial_json(path)
    assert [(r.frame_id, r.object_id) for r in loaded] == [
        ("t/0/h005.0_r020.0_a000.0", 1),
        ("t/0/h025.0_r020.0_a090.0", 1),
        ("t/0/h025.0_r020.0_a090.0", 2),
    ]


def test_trial_json_one_record_per_line(tmp_path):
    records = [make_record(object_id=i) for i in (1, 2, 3)]
    path = tmp_path / "annotations.json"
    write_trial_json(records, path, "t")
    text = path.read_text()
    doc = json.loads(text)
    assert doc["trial"] == "t"
    assert len(doc["frames"]) == 3
    assert len(text.rstrip("\n").splitlines()) == 2 + len(records)


def test_trial_json_empty(tmp_path):
    path = tmp_path / "annotations.json"
    write_trial_json([], path, "empty")
    assert read_trial_json(path) == ("empty", [])
    json.loads(path.read_text())


def _write_doc(tmp_path, frames):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"trial": "t", "frames": frames}))
    return path


def record_dict(**over):
    from dataclasses import asdict
    raw = asdict(make_record())
    raw["bbox"] = list(raw["bbox"])
    raw.update(over)
    return raw


@pytest.mark.parametrize("mutate,message", [
    ({"object_id": 0}, "object_id"),
    ({"object_id": 1.5}, "object_id"),
    ({"touches_border": 1}, "touches_border"),
    ({"bbox": [1.0, 2.0, 3.0]}, "bbox"),
    ({"bbox": [99.5, 149.5, 0.0, 100.0]}, "width and height"),
    ({"pixel_count": 0}, "pixel_count"),
    ({"pixel_count": 10001}, "pixel_count"),
    ({"orientation_deg": 360.0}, "orientation_deg"),
    ({"sun": 4}, "sun"),
    ({"distance_m": "far"}, "distance_m"),
])
def test_record_validation_errors(tmp_path, mutate, message):
    with pytest.raises(ValueError, match=message):
        read_trial_json(_write_doc(tmp_path, [record_dict(**mutate)]))


def test_missing_and_extra_fields_rejected(tmp_path):
    missing = record_dict()
    missing.pop("pixel_count")
    with pytest.raises(ValueError, match="pixel_count"):
        read_trial_json(_write_doc(tmp_path, [missing]))
    extra = record_dict(surprise=1)
    with pytest.raises(ValueError, match="surprise"):
        read_trial_json(_write_doc(tmp_path, [extra]))


def test_non_trial_document_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([1, 2, 3]))
    with pytest.raises(ValueError, match="trial"):
        read_trial_json(path)
