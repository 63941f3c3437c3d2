import json

import pytest

from orbitbench.annotate import read_trial_json
from orbitbench.config import EvalConfig, RunConfig
from orbitbench.evaluation import AngularHistogram, APGrid, oracle_detect
from orbitbench.geometry import SweepConfig, enumerate_sweep
from orbitbench.pipeline import (evaluate_run, generate_trial, grid_from_doc,
                                 hist_from_doc, read_results, report_run,
                                 write_results)
from orbitbench.raster import CameraIntrinsics, read_id_png


def small_config(output_dir, **over) -> RunConfig:
    base = dict(
        trial="t",
        output_dir=str(output_dir),
        sweep=SweepConfig(altitudes_m=(10.0, 30.0), radii_m=(10.0, 20.0),
                          azimuth_start_deg=0.0, azimuth_end_deg=90.0,
                          azimuth_step_deg=45.0, sun_conditions=("noon",)),
        intrinsics=CameraIntrinsics(width_px=128, height_px=128),
    )
    base.update(over)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    cfg = small_config(root / "out")
    out = generate_trial(cfg, workers=1)
    return cfg, out


@pytest.fixture(scope="module")
def oracle_results(run):
    _, out = run
    _, records = read_trial_json(out["annotations"])
    predictions = oracle_detect(records, min_pixels=1)
    return records, predictions, evaluate_run(records, predictions,
                                              EvalConfig())


def test_generate_layout(run):
    cfg, out = run
    assert out["n_frames"] == 12
    frame_files = sorted(p.name for p in out["frames_dir"].rglob("*.png"))
    assert len(frame_files) == 24  # rgb + id per frame
    assert out["annotations"].is_file()
    assert out["scene"].is_file()
    assert out["trial_dir"].name == "t"
    # no depth files unless requested
    assert list(out["frames_dir"].rglob("*.f32")) == []


def test_generate_annotations_cover_sweep(run):
    cfg, out = run
    trial, records = read_trial_json(out["annotations"])
    assert trial == "t"
    assert out["n_records"] == len(records) == 12
    sweep_ids = {f.frame_id for f in enumerate_sweep(cfg.sweep, trial="t")}
    assert {r.frame_id for r in records} == sweep_ids
    assert all(r.object_id == 1 for r in records)
    assert all(r.sun == "noon" for r in records)


def test_id_buffers_consistent_with_annotations(run):
    cfg, out = run
    _, records = read_trial_json(out["annotations"])
    record = records[0]
    ids = read_id_png(out["frames_dir"] / (record.frame_id + "_id.png"))
    assert int((ids == record.object_id).sum()) == record.pixel_count


def test_scene_json_contents(run):
    cfg, out = run
    doc = json.loads(out["scene"].read_text())
    assert doc["trial"] == "t"
    assert doc["n_frames"] == 12
    # aim height resolved from the target's bbox center
    assert doc["sweep"]["look_at_height_m"] == pytest.approx(0.9, abs=1e-9)
    assert doc["targets"] == [{
        "object_id": 1, "label": "person", "category": "person",
        "pose": "standing", "variant": 0, "yaw_deg": 0.0,
        "position": [0.0, 0.0, 0.0], "chest_marker": True,
    }]
    assert "noon" in doc["sun_table"]
    assert doc["intrinsics"]["width_px"] == 128


def test_generate_honors_fixed_look_at_height(tmp_path):
    cfg = small_config(
        tmp_path / "out", look_at_height_m=0.0,
        sweep=SweepConfig(altitudes_m=(10.0,), radii_m=(10.0,),
                          azimuth_start_deg=0.0, azimuth_end_deg=0.0,
                          azimuth_step_deg=45.0, sun_conditions=("noon",)))
    out = generate_trial(cfg, workers=1)
    doc = json.loads(out["scene"].read_text())
    assert doc["sweep"]["look_at_height_m"] == 0.0


def test_generate_writes_depth_when_asked(tmp_path):
    cfg = small_config(
        tmp_path / "out", write_depth=True,
        sweep=SweepConfig(altitudes_m=(10.0,), radii_m=(10.0,),
                          azimuth_start_deg=0.0, azimuth_end_deg=0.0,
                          azimuth_step_deg=45.0, sun_conditions=("noon",)))
    out = generate_trial(cfg, workers=1)
    assert len(list(out["frames_dir"].rglob("*_depth.f32"))) == 1


def test_worker_count_does_not_change_output_bytes(run, tmp_path):
    cfg, out = run
    cfg2 = small_config(tmp_path / "out")
    out2 = generate_trial(cfg2, workers=2)
    assert out["annotations"].read_bytes() == out2["annotations"].read_bytes()
    files1 = sorted(out["frames_dir"].rglob("*.png"))
    files2 = sorted(out2["frames_dir"].rglob("*.png"))
    assert [p.relative_to(out["frames_dir"]) for p in files1] == \
        [p.relative_to(out2["frames_dir"]) for p in files2]
    for p1, p2 in zip(files1, files2):
        assert p1.read_bytes() == p2.read_bytes()


def test_progress_callback_reaches_total(tmp_path):
    cfg = small_config(tmp_path / "out")
    seen = []
    generate_trial(cfg, workers=1, progress=lambda d, t: seen.append((d, t)))
    assert seen[-1] == (12, 12)
    assert [d for d, _ in seen] == sorted(d for d, _ in seen)


# ---------------------------------------------------------------------------
# Evaluation document

def test_oracle_evaluation_is_perfect(oracle_results):
    records, predictions, results = oracle_results
    assert results["n_annotations"] == 12
    assert results["n_predictions"] == len(predictions) == 12
    assert results["n_true_positives"] == 12
    assert results["ap_grid"]["map"] == 1.0
    # splits default to sweep-range midpoints
    assert results["config"]["h_split"] == 20.0
    assert results["config"]["r_split"] == 15.0
    grid = grid_from_doc(results["ap_grid"])
    assert grid.altitudes == (10.0, 30.0)
    assert grid.radii == (10.0, 20.0)
    assert all(ap == 1.0 for row in grid.cells for ap in row)


def test_oracle_evaluation_regions_and_boundary(oracle_results):
    _, _, results = oracle_results
    regions = results["regions"]
    assert set(regions) == {"LargeTarget", "NadirView", "SmallTarget",
                            "EyeLevelView"}
    for name in regions:
        assert regions[name] == {"ap": 1.0, "n_gt": 3, "n_tp": 3}
    boundary = results["boundary"]
    assert boundary["threshold"] == 0.5
    assert boundary["boundary_cells"] == []  # uniformly perfect grid
    assert boundary["usable_envelope"] == [10.0, 10.0]


def test_oracle_evaluation_histograms(oracle_results):
    _, _, results = oracle_results
    hist = hist_from_doc(results["angular"])
    assert hist.total == 12
    assert hist.counts[0] == 4   # azimuth 0: all four cells
    assert hist.counts[4] == 4   # azimuth 45
    assert hist.counts[9] == 4   # azimuth 90
    nadir = hist_from_doc(results["angular_nadir"])
    outside = hist_from_doc(results["angular_outside_nadir"])
    assert nadir.total + outside.total == hist.total


def test_per_sun_grid_matches_single_sun_run(oracle_results):
    _, _, results = oracle_results
    assert list(results["ap_grid_per_sun"]) == ["noon"]
    assert results["ap_grid_per_sun"]["noon"] == results["ap_grid"]


def test_results_round_trip(tmp_path, oracle_results):
    _, _, results = oracle_results
    path = tmp_path / "results.json"
    write_results(results, path)
    assert read_results(path) == json.loads(json.dumps(results))


def test_read_results_errors(tmp_path):
    with pytest.raises(ValueError, match="not found"):
        read_results(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ValueError, match="malformed"):
        read_results(bad)
    bad.write_text(json.dumps({"config": {}}))
    with pytest.raises(ValueError, match="missing keys"):
        read_results(bad)
    bad.write_text(json.dumps([1]))
    with pytest.raises(ValueError, match="object"):
        read_results(bad)


def test_grid_doc_round_trip():
    grid = APGrid(altitudes=(5.0, 15.0), radii=(10.0,),
                  cells=((0.5,), (None,)))
    from orbitbench.pipeline import _grid_doc
    assert grid_from_doc(_grid_doc(grid)) == grid


def test_hist_doc_round_trip():
    hist = AngularHistogram(bin_width_deg=10.0, counts=tuple(range(36)),
                            mode="raw")
    from orbitbench.pipeline import _hist_doc
    assert hist_from_doc(_hist_doc(hist)) == hist


# ---------------------------------------------------------------------------
# Report artifacts

EXPECTED_REPORT_FILES = [
    "angular.svg", "ap_grid.csv", "ap_grid_noon.csv", "heatmap.svg",
    "heatmap_noon.svg", "summary.csv",
]


def test_report_run_artifacts(tmp_path, oracle_results):
    _, _, results = oracle_results
    bundle = report_run(results, tmp_path / "report")
    names = [name for name, _ in bundle.files]
    assert names == EXPECTED_REPORT_FILES
    for name in names + ["manifest.json"]:
        assert (tmp_path / "report" / name).is_file()
    summary = (tmp_path / "report" / "summary.csv").read_text()
    assert summary == "scope,mAP\noverall,1.0000\nnoon,1.0000\n"
    csv = (tmp_path / "report" / "ap_grid.csv").read_text()
    assert csv.splitlines()[-1] == "mAP,1.0000"


def test_report_run_is_byte_deterministic(tmp_path, oracle_results):
    _, _, results = oracle_results
    a = report_run(results, tmp_path / "a")
    b = report_run(results, tmp_path / "b")
    assert a.files == b.files
    for name, _ in a.files:
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()
    assert a.manifest_path.read_bytes() == b.manifest_path.read_bytes()
