"""Detection scoring: AP at IoU 0.5 and recall at fixed false-alarm density.

Matching follows the standard greedy protocol: detections are ranked by
descending confidence (ties broken by image id, then box position), and
each detection claims the unmatched same-class, same-image ground-truth
box with the highest IoU, provided that IoU reaches the threshold.
Average precision integrates the full precision-recall curve under its
right-to-left monotone envelope (continuous, all points).  R(alpha) is
the best recall achievable at any confidence threshold whose false-alarm
density stays within alpha per square kilometer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .groundtruth import Annotation, BBox

DEFAULT_IOU_MIN = 0.5


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_id: int
    bbox: BBox
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValidationError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass
class OperatingPoint:
    threshold: float
    recall: float
    tp: float
    fp: float


@dataclass
class EvalReport:
    ap50: float
    recall_at: dict[float, float]
    gt_count: int
    det_count: int
    area_km2: float
    operating_points: dict[float, OperatingPoint] = field(default_factory=dict)
    runs: int = 1

    def to_dict(self) -> dict:
        return {
            "ap50": round(self.ap50, 6),
            "recall_at": {
                f"{alpha:g}": round(r, 6) for alpha, r in sorted(self.recall_at.items())
            },
            "operating_points": {
                f"{alpha:g}": {
                    "threshold": round(op.threshold, 6),
                    "recall": round(op.recall, 6),
                    "tp": op.tp,
                    "fp": op.fp,
                }
                for alpha, op in sorted(self.operating_points.items())
            },
            "gt_count": self.gt_count,
            "det_count": self.det_count,
            "area_km2": self.area_km2,
            "runs": self.runs,
        }


def iou(a: BBox, b: BBox) -> float:
    """Intersection area over union area of two pixel boxes."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def _rank_key(det: Detection):
    # Deterministic ranking: confidence descending, then image id and box
    # position, so matching never depends on input list order.
    return (-det.confidence, det.image_id, det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h, det.class_id)


def match_detections(
    dets: list[Detection],
    gts: list[Annotation],
    iou_min: float = DEFAULT_IOU_MIN,
) -> list[tuple[Detection, bool]]:
    """Greedy confidence-descending matching with single GT consumption.

    Returns (detection, is_true_positive) pairs in ranked order.
    """
    ranked = sorted(dets, key=_rank_key)
    by_image: dict[tuple[str, int], list[Annotation]] = {}
    for gt in sorted(gts, key=lambda g: (g.image_id, g.bbox.y, g.bbox.x)):
        by_image.setdefault((gt.image_id, gt.class_id), []).append(gt)
    consumed: set[int] = set()

    flags = []
    for det in ranked:
        candidates = by_image.get((det.image_id, det.class_id), ())
        best_iou, best_gt = 0.0, None
        for gt in candidates:
            if id(gt) in consumed:
                continue
            value = iou(det.bbox, gt.bbox)
            if value > best_iou:
                best_iou, best_gt = value, gt
        if best_gt is not None and best_iou >= iou_min:
            consumed.add(id(best_gt))
            flags.append((det, True))
        else:
            flags.append((det, False))
    return flags


def ap50(
    dets: list[Detection], gts: list[Annotation], iou_min: float = DEFAULT_IOU_MIN
) -> float:
    """Area under the monotone-envelope precision-recall curve."""
    if not gts:
        raise ValidationError("ap50 requires at least one ground-truth box")
    flags = match_detections(dets, gts, iou_min)
    n_gt = len(gts)
    tp = fp = 0
    recalls = []
    precisions = []
    for _, is_tp in flags:
        if is_tp:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / n_gt)
        precisions.append(tp / (tp + fp))
    if not recalls:
        return 0.0

    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    area = 0.0
    prev_recall = 0.0
    for recall, env in zip(recalls, envelope):
        if recall > prev_recall:
            area += (recall - prev_recall) * env
            prev_recall = recall
    return area


def recall_at_fa(
    dets: list[Detection],
    gts: list[Annotation],
    area_km2: float,
    alpha: float,
    iou_min: float = DEFAULT_IOU_MIN,
) -> float:
    """Best recall among thresholds whose FP density stays within alpha/km2."""
    recall, _ = _recall_operating_point(dets, gts, area_km2, alpha, iou_min)
    return recall


def _recall_operating_point(dets, gts, area_km2, alpha, iou_min):
    if not gts:
        raise ValidationError("recall_at_fa requires at least one ground-truth box")
    if area_km2 <= 0:
        raise ValidationError(f"area_km2 must be > 0, got {area_km2}")
    flags = match_detections(dets, gts, iou_min)
    n_gt = len(gts)

    best = (0.0, OperatingPoint(threshold=float("inf"), recall=0.0, tp=0, fp=0))
    tp = fp = 0
    for i, (det, is_tp) in enumerate(flags):
        if is_tp:
            tp += 1
        else:
            fp += 1
        last_of_threshold = i + 1 == len(flags) or flags[i + 1][0].confidence != det.confidence
        if not last_of_threshold:
            continue
        if fp / area_km2 <= alpha:
            recall = tp / n_gt
            if recall > best[0]:
                best = (
                    recall,
                    OperatingPoint(threshold=det.confidence, recall=recall, tp=tp, fp=fp),
                )
    return best


def evaluate(
    dets: list[Detection],
    gts: list[Annotation],
    area_km2: float,
    alphas: list[float],
    iou_min: float = DEFAULT_IOU_MIN,
) -> EvalReport:
    """Score one detection run against ground truth."""
    recall_at = {}
    points = {}
    for alpha in alphas:
        recall, op = _recall_operating_point(dets, gts, area_km2, alpha, iou_min)
        recall_at[alpha] = recall
        points[alpha] = op
    return EvalReport(
        ap50=ap50(dets, gts, iou_min),
        recall_at=recall_at,
        gt_count=len(gts),
        det_count=len(dets),
        area_km2=area_km2,
        operating_points=points,
    )


def aggregate_runs(reports: list[EvalReport]) -> EvalReport:
    """Arithmetic mean of AP50 and of each R(alpha) across repeated runs."""
    if not reports:
        raise ValidationError("aggregate_runs requires at least one report")
    first = reports[0]
    alphas = set(first.recall_at)
    for r in reports[1:]:
        if set(r.recall_at) != alphas:
            raise ValidationError("cannot aggregate reports with different alpha sets")
        if r.area_km2 != first.area_km2:
            raise ValidationError("cannot aggregate reports over different areas")
        if r.gt_count != first.gt_count:
            raise ValidationError("cannot aggregate reports over different ground truth")
    n = len(reports)
    points = {}
    for alpha in alphas:
        ops = [r.operating_points.get(alpha) for r in reports]
        if all(op is not None for op in ops):
            points[alpha] = OperatingPoint(
                threshold=sum(op.threshold for op in ops) / n,
                recall=sum(op.recall for op in ops) / n,
                tp=sum(op.tp for op in ops) / n,
                fp=sum(op.fp for op in ops) / n,
            )
    return EvalReport(
        ap50=sum(r.ap50 for r in reports) / n,
        recall_at={a: sum(r.recall_at[a] for r in reports) / n for a in alphas},
        gt_count=first.gt_count,
        det_count=round(sum(r.det_count for r in reports) / n),
        area_km2=first.area_km2,
        operating_points=points,
        runs=sum(r.runs for r in reports),
    )


def format_detections(dets: list[Detection]) -> str:
    """Per-image detection file rows: ``class_id confidence x y w h`` (pixels)."""
    rows = []
    for d in dets:
        b = d.bbox
        rows.append(f"{d.class_id} {d.confidence:.6f} {b.x} {b.y} {b.w} {b.h}")
    return "".join(row + "\n" for row in rows)


def parse_detections(text: str, image_id: str) -> list[Detection]:
    dets = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValidationError(
                f"detection line {lineno}: expected 'class_id confidence x y w h', "
                f"got {len(parts)} fields"
            )
        class_id = int(parts[0])
        confidence = float(parts[1])
        x, y, w, h = (int(round(float(p))) for p in parts[2:])
        dets.append(
            Detection(
                image_id=image_id,
                class_id=class_id,
                bbox=BBox(x=x, y=y, w=w, h=h),
                confidence=confidence,
            )
        )
    return dets


def read_detection_dir(det_dir: str | Path) -> dict[str, list[Detection]]:
    """All ``*.txt`` detection files in a directory, keyed by image id."""
    det_dir = Path(det_dir)
    out = {}
    for path in sorted(det_dir.glob("*.txt")):
        out[path.stem] = parse_detections(path.read_text(encoding="utf-8"), path.stem)
    return out
