"""Detection scoring against trial annotations.

Matching follows the Pascal VOC protocol: predictions in descending score
order greedily claim the unmatched same-frame, same-label ground truth of
highest IoU, one gt per prediction, TP iff that IoU clears the threshold.
AP integrates the monotone precision-recall envelope (all-point
interpolation); an 11-point variant is available for comparison with
older toolchains.

Box formats: predictions use corner boxes (x_min, y_min, width, height);
annotations use center boxes (center_x, center_y, width, height) with
pixel-index midpoints, so the corner of a center box is
x_min = center_x - (width - 1) / 2.  IoU is computed on continuous areas
(width * height, no +1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .fsio import atomic_write_text

REGIONS = ("LargeTarget", "NadirView", "SmallTarget", "EyeLevelView")

# Sweep-range midpoints of the canonical trial; region splits default to
# these when a config does not override them.
DEFAULT_H_SPLIT = 27.5
DEFAULT_R_SPLIT = 17.5


class PredictionFormatError(Exception):
    """Prediction file is not parseable JSON."""


class PredictionSchemaError(Exception):
    """Prediction JSON parsed but violates the schema."""


class UnknownFrameError(Exception):
    """Predictions reference frame_ids absent from the annotations."""


@dataclass(frozen=True)
class PredictionRecord:
    frame_id: str
    bbox: tuple  # (x_min_px, y_min_px, width_px, height_px)
    score: float
    label: str


def center_to_corner(bbox):
    cx, cy, w, h = bbox
    return (cx - (w - 1) / 2.0, cy - (h - 1) / 2.0, w, h)


def corner_to_center(bbox):
    x, y, w, h = bbox
    return (x + (w - 1) / 2.0, y + (h - 1) / 2.0, w, h)


def iou(box_a, box_b) -> float:
    ax, ay, aw, ah = box_a
    bx, by, bw, bh = box_b
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ValueError("boxes must have positive width and height")
    ix = min(ax + aw, bx + bw) - max(ax, bx)
    iy = min(ay + ah, by + bh) - max(ay, by)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (aw * ah + bw * bh - inter)


@dataclass(frozen=True)
class Match:
    prediction: PredictionRecord
    is_tp: bool
    gt_index: int | None  # index into the annotation list, TPs only


@dataclass(frozen=True)
class MatchResult:
    matches: tuple  # of Match, descending score, ties in input order
    n_gt: int
    gt_matched: tuple  # of bool, aligned with the annotation list


def match_predictions(predictions, annotations,
                      iou_threshold: float = 0.5) -> MatchResult:
    """Greedy one-to-one matching over the whole annotation set.

    Matching is frame-local, so slicing the result to any subset of
    frames equals matching that subset alone; the per-cell AP grids rely
    on this.
    """
    known = {a.frame_id for a in annotations}
    unknown = sorted({p.frame_id for p in predictions} - known)
    if unknown:
        raise UnknownFrameError(
            "predictions reference frame_ids absent from annotations: "
            + ", ".join(unknown))

    by_frame: dict = {}
    for gi, gt in enumerate(annotations):
        by_frame.setdefault((gt.frame_id, gt.object_label), []).append(gi)
    gt_corner = [center_to_corner(a.bbox) for a in annotations]

    gt_matched = [False] * len(annotations)
    matches = []
    order = sorted(range(len(predictions)),
                   key=lambda i: -predictions[i].score)
    for pi in order:
        pred = predictions[pi]
        best_iou, best_gi = 0.0, None
        for gi in by_frame.get((pred.frame_id, pred.label), ()):
            if gt_matched[gi]:
                continue
            overlap = iou(pred.bbox, gt_corner[gi])
            if overlap > best_iou:
                best_iou, best_gi = overlap, gi
        if best_gi is not None and best_iou >= iou_threshold:
            gt_matched[best_gi] = True
            matches.append(Match(pred, True, best_gi))
        else:
            matches.append(Match(pred, False, None))
    return MatchResult(matches=tuple(matches), n_gt=len(annotations),
                       gt_matched=tuple(gt_matched))


def average_precision(tp_flags, n_gt: int, mode: str = "all_point"):
    """AP from TP/FP flags already in descending score order.

    Returns None when n_gt is 0 (undefined, no positives to recall).
    """
    if mode not in ("all_point", "11point"):
        raise ValueError(f"unknown AP mode {mode!r}")
    if n_gt == 0:
        return None
    flags = list(tp_flags)
    precisions, recalls = [], []
    tp = 0
    for i, flag in enumerate(flags):
        if flag:
            tp += 1
        precisions.append(tp / (i + 1))
        recalls.append(tp / n_gt)
    if not flags:
        return 0.0

    # Monotone envelope: p_interp(r) = max precision at recall >= r.
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])

    if mode == "11point":
        total = 0.0
        for k in range(11):
            r = k / 10.0
            total += next((p for p, rc in zip(precisions, recalls)
                           if rc >= r), 0.0)
        return total / 11.0

    ap = 0.0
    prev_r = 0.0
    for p, r in zip(precisions, recalls):
        if r > prev_r:
            ap += (r - prev_r) * p
            prev_r = r
    return ap


# ---------------------------------------------------------------------------
# Surfaces over the sweep

@dataclass(frozen=True)
class APGrid:
    altitudes: tuple  # sorted unique, row axis
    radii: tuple      # sorted unique, column axis
    cells: tuple      # cells[i][j] is AP at (altitudes[i], radii[j]) or None

    @property
    def map_value(self):
        defined = [ap for row in self.cells for ap in row if ap is not None]
        if not defined:
            return None
        return sum(defined) / len(defined)

    def cell(self, altitude, radius):
        return self.cells[self.altitudes.index(altitude)][self.radii.index(radius)]


def _frame_geometry(annotations) -> dict:
    """frame_id -> (altitude, radius, azimuth, sun); rejects frames whose
    records disagree on camera geometry."""
    geo = {}
    for a in annotations:
        key = (a.camera_altitude_m, a.radius_m, a.azimuth_deg, a.sun)
        if geo.setdefault(a.frame_id, key) != key:
            raise ValueError(f"frame {a.frame_id}: records disagree on "
                             "camera geometry")
    return geo


def _scoped(annotations, result: MatchResult, keep_frame) -> tuple:
    """Restrict a global match to the frames selected by keep_frame."""
    n_gt = sum(1 for a in annotations if keep_frame(a.frame_id))
    flags = [m.is_tp for m in result.matches if keep_frame(m.prediction.frame_id)]
    return flags, n_gt


def bin_by_height_radius(annotations, result: MatchResult, sun=None,
                         ap_mode: str = "all_point") -> APGrid:
    """AP per (altitude, radius) cell, optionally for one sun condition.

    Cell axes span the filtered annotations; cells without ground truth
    are None and excluded from map_value.
    """
    geo = _frame_geometry(annotations)
    for m in result.matches:
        if m.prediction.frame_id not in geo:
            raise UnknownFrameError(
                f"prediction for frame {m.prediction.frame_id} absent "
                "from annotations")
    if sun is not None:
        in_sun = lambda fid: geo[fid][3] == sun
    else:
        in_sun = lambda fid: True

    scoped = [a for a in annotations if in_sun(a.frame_id)]
    altitudes = tuple(sorted({a.camera_altitude_m for a in scoped}))
    radii = tuple(sorted({a.radius_m for a in scoped}))

    rows = []
    for h in altitudes:
        row = []
        for r in radii:
            keep = lambda fid: (in_sun(fid) and geo[fid][0] == h
                                and geo[fid][1] == r)
            flags, n_gt = _scoped(annotations, result, keep)
            row.append(average_precision(flags, n_gt, mode=ap_mode))
        rows.append(tuple(row))
    return APGrid(altitudes=altitudes, radii=radii, cells=tuple(rows))


def classify_region(altitude_m, radius_m, h_split=DEFAULT_H_SPLIT,
                    r_split=DEFAULT_R_SPLIT) -> str:
    """Quadrant of the sweep: near/low gives large targets, near/high is
    the nadir view, far/high gives small targets, far/low is eye level."""
    if altitude_m < h_split:
        return "LargeTarget" if radius_m < r_split else "EyeLevelView"
    return "NadirView" if radius_m < r_split else "SmallTarget"


@dataclass(frozen=True)
class AngularHistogram:
    bin_width_deg: float
    counts: tuple  # per bin, bins cover [0, 360) left-closed
    mode: str      # "tp" or "raw"

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


def angular_histogram(annotations, result: MatchResult, bin_width_deg=10,
                      mode: str = "tp", cell=None, region=None, sun=None,
                      h_split=DEFAULT_H_SPLIT,
                      r_split=DEFAULT_R_SPLIT) -> AngularHistogram:
    """Detections per camera azimuth bin.

    mode "tp" counts IoU-qualified true positives; mode "raw" counts
    every prediction in scope regardless of matching.  Scope filters:
    cell=(altitude, radius), region name from REGIONS or "OutsideNadir",
    sun condition name.
    """
    if bin_width_deg <= 0 or 360.0 % bin_width_deg != 0:
        raise ValueError(f"bin width {bin_width_deg} does not divide 360")
    if mode not in ("tp", "raw"):
        raise ValueError(f"unknown histogram mode {mode!r}")
    if region is not None and region not in REGIONS + ("OutsideNadir",):
        raise ValueError(f"unknown region {region!r}")

    geo = _frame_geometry(annotations)

    def in_scope(fid):
        h, r, _, s = geo[fid]
        if cell is not None and (h, r) != tuple(cell):
            return False
        if sun is not None and s != sun:
            return False
        if region is not None:
            got = classify_region(h, r, h_split, r_split)
            if region == "OutsideNadir":
                return got != "NadirView"
            return got == region
        return True

    n_bins = int(round(360.0 / bin_width_deg))
    counts = [0] * n_bins
    for m in result.matches:
        if mode == "tp" and not m.is_tp:
            continue
        fid = m.prediction.frame_id
        if fid not in geo or not in_scope(fid):
            continue
        azimuth = geo[fid][2] % 360.0
        counts[int(azimuth // bin_width_deg)] += 1
    return AngularHistogram(bin_width_deg=float(bin_width_deg),
                            counts=tuple(counts), mode=mode)


def region_summary(annotations, result: MatchResult,
                   h_split=DEFAULT_H_SPLIT, r_split=DEFAULT_R_SPLIT,
                   ap_mode: str = "all_point") -> dict:
    """Per-quadrant AP: region name -> {"ap", "n_gt", "n_tp"}."""
    geo = _frame_geometry(annotations)
    summary = {}
    for name in REGIONS:
        keep = lambda fid: classify_region(geo[fid][0], geo[fid][1],
                                           h_split, r_split) == name
        flags, n_gt = _scoped(annotations, result, keep)
        summary[name] = {"ap": average_precision(flags, n_gt, mode=ap_mode),
                         "n_gt": n_gt, "n_tp": sum(flags)}
    return summary


@dataclass(frozen=True)
class BoundaryMap:
    threshold: float
    boundary_cells: frozenset  # (altitude, radius) at the degradation edge
    usable_envelope: tuple     # per altitude row: min radius with AP >= t,
                               # None when the row never clears it


def boundary_map(grid: APGrid, threshold: float) -> BoundaryMap:
    """Cells at or above threshold with a defined 4-neighbor below it."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    defined = [ap for row in grid.cells for ap in row if ap is not None]
    if not defined:
        raise ValueError("grid has no defined cells")

    n_rows, n_cols = len(grid.altitudes), len(grid.radii)
    cells = set()
    for i in range(n_rows):
        for j in range(n_cols):
            ap = grid.cells[i][j]
            if ap is None or ap < threshold:
                continue
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ni, nj = i + di, j + dj
                if 0 <= ni < n_rows and 0 <= nj < n_cols:
                    neighbor = grid.cells[ni][nj]
                    if neighbor is not None and neighbor < threshold:
                        cells.add((grid.altitudes[i], grid.radii[j]))
                        break

    envelope = []
    for i in range(n_rows):
        usable = [grid.radii[j] for j in range(n_cols)
                  if grid.cells[i][j] is not None
                  and grid.cells[i][j] >= threshold]
        envelope.append(min(usable) if usable else None)
    return BoundaryMap(threshold=threshold, boundary_cells=frozenset(cells),
                       usable_envelope=tuple(envelope))


# ---------------------------------------------------------------------------
# Oracle detector and prediction files

def oracle_detect(annotations, min_pixels: int) -> list:
    """Synthetic detector with analytically known behavior: fires on every
    annotation whose segment has at least min_pixels pixels, reporting the
    ground-truth box with score min(1, pixel_count / (4 * min_pixels))."""
    if min_pixels < 1:
        raise ValueError("min_pixels must be >= 1")
    preds = []
    for a in annotations:
        if a.pixel_count >= min_pixels:
            preds.append(PredictionRecord(
                frame_id=a.frame_id,
                bbox=center_to_corner(a.bbox),
                score=min(1.0, a.pixel_count / (4.0 * min_pixels)),
                label=a.object_label))
    return preds


_PRED_FIELDS = ("frame_id", "bbox", "score", "label")


def _check_prediction(raw, index: int) -> PredictionRecord:
    if not isinstance(raw, dict):
        raise PredictionSchemaError(f"prediction {index}: not an object")
    missing = [k for k in _PRED_FIELDS if k not in raw]
    extra = [k for k in raw if k not in _PRED_FIELDS]
    if missing or extra:
        raise PredictionSchemaError(f"prediction {index}: missing fields "
                                    f"{missing}, unexpected fields {extra}")
    if not isinstance(raw["frame_id"], str):
        raise PredictionSchemaError(f"prediction {index}: frame_id must be "
                                    "a string")
    if not isinstance(raw["label"], str):
        raise PredictionSchemaError(f"prediction {index}: label must be "
                                    "a string")
    bbox = raw["bbox"]
    if not (isinstance(bbox, list) and len(bbox) == 4
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in bbox)):
        raise PredictionSchemaError(f"prediction {index}: bbox must be "
                                    "[x_min, y_min, width, height]")
    if bbox[2] <= 0 or bbox[3] <= 0:
        raise PredictionSchemaError(f"prediction {index}: bbox extents "
                                    "must be positive")
    score = raw["score"]
    if not isinstance(score, (int, float)) or isinstance(score, bool) \
            or not 0.0 <= score <= 1.0:
        raise PredictionSchemaError(f"prediction {index}: score {score!r} "
                                    "outside [0, 1]")
    return PredictionRecord(frame_id=raw["frame_id"],
                            bbox=tuple(float(v) for v in bbox),
                            score=float(score), label=raw["label"])


def ingest_predictions(path, known_frame_ids=None) -> list:
    """Read and validate a prediction file.

    Raises PredictionFormatError for unparseable JSON,
    PredictionSchemaError for structural violations, and UnknownFrameError
    when known_frame_ids is given and some prediction falls outside it.
    """
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise PredictionFormatError(
            f"{path}: malformed JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict) or set(doc) != {"predictions"} \
            or not isinstance(doc["predictions"], list):
        raise PredictionSchemaError(
            f'{path}: expected {{"predictions": [...]}} at top level')
    records = [_check_prediction(raw, i)
               for i, raw in enumerate(doc["predictions"])]
    if known_frame_ids is not None:
        unknown = sorted({r.frame_id for r in records} - set(known_frame_ids))
        if unknown:
            raise UnknownFrameError(
                "predictions reference unknown frame_ids: "
                + ", ".join(unknown))
    return records


def write_predictions(records, path) -> None:
    lines = [json.dumps({"frame_id": r.frame_id, "bbox": list(r.bbox),
                         "score": r.score, "label": r.label},
                        separators=(", ", ": "))
             for r in records]
    if lines:
        text = '{"predictions": [\n%s\n]}\n' % ",\n".join(lines)
    else:
        text = '{"predictions": []}\n'
    atomic_write_text(path, text)
