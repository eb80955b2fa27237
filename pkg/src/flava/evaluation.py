"""Scoring of annotation sets against ground truth.

Accuracy is measured two ways, per common 3D detection practice:

* IoU, computed only over prediction/ground-truth pairs that intersect
  (rotated-rectangle overlap in the bird view, plus vertical overlap for the
  3D variant), averaged over matched pairs.
* Average precision per class at two difficulty levels. The strict level
  requires IoU above 0.7 for Car and Van and above 0.5 for Pedestrian and
  Cyclist; the easy level uses 0.5 and 0.25. Annotations carry no confidence
  score, so every prediction ranks equally and the 11-point interpolated AP
  degenerates to precision times the fraction of recall levels reached.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import FrameMismatchError
from .geometry import Box3D, Category, bev_polygon, convex_intersection_area

# Per-class true-positive IoU thresholds. Classes outside the four the
# difficulty levels define fall back to the vehicle threshold.
STRICT_THRESHOLDS = {
    Category.CAR: 0.7,
    Category.VAN: 0.7,
    Category.PEDESTRIAN: 0.5,
    Category.CYCLIST: 0.5,
}
EASY_THRESHOLDS = {
    Category.CAR: 0.5,
    Category.VAN: 0.5,
    Category.PEDESTRIAN: 0.25,
    Category.CYCLIST: 0.25,
}
_VEHICLE_DEFAULT = {"strict": 0.7, "easy": 0.5}

RECALL_LEVELS = 11  # 0.0, 0.1, ..., 1.0


def matching_category(cat: Category) -> Category:
    """Person_sitting is evaluated as Pedestrian; all other classes stand."""
    if cat == Category.PERSON_SITTING:
        return Category.PEDESTRIAN
    return cat


def class_threshold(cat: Category, difficulty: str,
                    overrides: dict[Category, float] | None = None) -> float:
    if overrides and cat in overrides:
        return overrides[cat]
    table = STRICT_THRESHOLDS if difficulty == "strict" else EASY_THRESHOLDS
    if difficulty not in ("strict", "easy"):
        raise ValueError(f"difficulty must be 'strict' or 'easy', got {difficulty!r}")
    return table.get(matching_category(cat), _VEHICLE_DEFAULT[difficulty])


def _footprint_intersection(a: Box3D, b: Box3D) -> float:
    # Clipping drifts by rounding ulps around full containment (identical or
    # nested footprints). The intersection can never exceed either footprint;
    # within the geometric tolerance of that bound, it IS that bound. Keeps
    # self-IoU exactly 1 and IoU within [0, 1].
    inter = convex_intersection_area(bev_polygon(a), bev_polygon(b))
    smaller = min(a.bev_area, b.bev_area)
    if smaller - inter < 1e-9:
        return smaller
    return inter


def bev_iou(a: Box3D, b: Box3D) -> float:
    """Rotated-rectangle IoU of the bird-view footprints."""
    inter = _footprint_intersection(a, b)
    union = a.bev_area + b.bev_area - inter
    return inter / union if union > 0 else 0.0


def iou_3d(a: Box3D, b: Box3D) -> float:
    """Volume IoU: footprint intersection times vertical overlap."""
    inter_area = _footprint_intersection(a, b)
    dz = min(a.top_z, b.top_z) - max(a.bottom_z, b.bottom_z)
    inter_vol = inter_area * max(0.0, dz)
    union = a.volume + b.volume - inter_vol
    return inter_vol / union if union > 0 else 0.0


@dataclass(frozen=True)
class MatchedPair:
    pred_index: int
    gt_index: int
    bev_iou: float
    iou_3d: float


@dataclass(frozen=True)
class MatchResult:
    """Greedy same-class matching of predictions to ground truths.

    ``non_intersecting_preds`` had zero 3D overlap with every same-class
    ground truth and are excluded from IoU averaging; ``unmatched_preds``
    overlapped something but lost the assignment.
    """

    pairs: tuple[MatchedPair, ...]
    unmatched_preds: tuple[int, ...]
    unmatched_gts: tuple[int, ...]
    non_intersecting_preds: tuple[int, ...]


def match_annotations(preds: list[Box3D], gts: list[Box3D]) -> MatchResult:
    """Match greedily by descending 3D IoU among same-class candidate pairs
    (ties broken by lower prediction index, then lower ground-truth index);
    each box matches at most once."""
    candidates = []
    intersecting = set()
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            if matching_category(p.category) != matching_category(g.category):
                continue
            iou = iou_3d(p, g)
            if iou > 0.0:
                candidates.append((iou, i, j))
                intersecting.add(i)
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    used_p, used_g = set(), set()
    pairs = []
    for iou, i, j in candidates:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        pairs.append(MatchedPair(i, j, bev_iou(preds[i], gts[j]), iou))
    non_intersecting = tuple(i for i in range(len(preds)) if i not in intersecting)
    unmatched_p = tuple(i for i in range(len(preds))
                        if i not in used_p and i in intersecting)
    unmatched_g = tuple(j for j in range(len(gts)) if j not in used_g)
    return MatchResult(tuple(pairs), unmatched_p, unmatched_g, non_intersecting)


def mean_iou(match: MatchResult) -> tuple[float | None, float | None]:
    """(mean BEV IoU, mean 3D IoU) over matched pairs; None when nothing
    matched, never a fake zero."""
    if not match.pairs:
        return None, None
    n = len(match.pairs)
    return (sum(p.bev_iou for p in match.pairs) / n,
            sum(p.iou_3d for p in match.pairs) / n)


def _ap_from_counts(tp: int, fp: int, n_gt: int) -> float:
    """Degenerate 11-point interpolated AP for unscored predictions: one
    precision/recall point; AP = P * (#recall levels <= R) / 11.

    The recall-level count is done in integer arithmetic (k/10 <= TP/N_gt
    iff k*N_gt <= 10*TP) to avoid float-grid artifacts.
    """
    if tp + fp == 0 or n_gt == 0:
        return 0.0
    precision = tp / (tp + fp)
    levels = sum(1 for k in range(RECALL_LEVELS) if k * n_gt <= 10 * tp)
    return precision * levels / RECALL_LEVELS


def _greedy_tp(preds: list[Box3D], gts: list[Box3D], iou_fn, threshold: float) -> int:
    """True-positive count at an IoU threshold: greedy one-to-one matching,
    strictly-greater acceptance."""
    candidates = []
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            iou = iou_fn(p, g)
            if iou > threshold:
                candidates.append((iou, i, j))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    used_p, used_g = set(), set()
    for _, i, j in candidates:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
    return len(used_p)


def average_precision(
    preds: list[Box3D],
    gts: list[Box3D],
    difficulty: str = "strict",
    variant: str = "3d",
    class_thresholds: dict[Category, float] | None = None,
) -> dict[Category, float]:
    """Per-class AP over one pooled box set.

    ``variant`` selects which IoU gates true positives ('bev' or '3d'),
    matching the reported column. Classes with no ground truth are omitted.
    """
    iou_fn = bev_iou if variant == "bev" else iou_3d
    by_class_gt: dict[Category, list[Box3D]] = {}
    for g in gts:
        by_class_gt.setdefault(matching_category(g.category), []).append(g)
    by_class_pred: dict[Category, list[Box3D]] = {}
    for p in preds:
        by_class_pred.setdefault(matching_category(p.category), []).append(p)

    out = {}
    for cat, class_gts in sorted(by_class_gt.items(), key=lambda kv: kv[0].value):
        class_preds = by_class_pred.get(cat, [])
        threshold = class_threshold(cat, difficulty, class_thresholds)
        tp = _greedy_tp(class_preds, class_gts, iou_fn, threshold)
        out[cat] = _ap_from_counts(tp, len(class_preds) - tp, len(class_gts))
    return out


@dataclass(frozen=True)
class ClassAP:
    ap_bev_strict: float
    ap_bev_easy: float
    ap_3d_strict: float
    ap_3d_easy: float


@dataclass(frozen=True)
class EvalReport:
    """Aggregate scores for one prediction set against one ground truth set."""

    mean_bev_iou: float | None
    mean_3d_iou: float | None
    per_class: dict = field(default_factory=dict)
    n_pred: int = 0
    n_gt: int = 0
    n_matched: int = 0
    n_non_intersecting: int = 0
    frames: tuple[int, ...] = ()

    def as_dict(self) -> dict:
        return {
            "mean_bev_iou": self.mean_bev_iou,
            "mean_3d_iou": self.mean_3d_iou,
            "per_class": {
                cat.value: {
                    "ap_bev_strict": ap.ap_bev_strict,
                    "ap_bev_easy": ap.ap_bev_easy,
                    "ap_3d_strict": ap.ap_3d_strict,
                    "ap_3d_easy": ap.ap_3d_easy,
                }
                for cat, ap in sorted(self.per_class.items(), key=lambda kv: kv[0].value)
            },
            "counts": {
                "predictions": self.n_pred,
                "ground_truths": self.n_gt,
                "matched": self.n_matched,
                "non_intersecting_predictions": self.n_non_intersecting,
            },
            "frames": list(self.frames),
        }


def evaluate(
    preds_by_frame: dict[int, list[Box3D]],
    gts_by_frame: dict[int, list[Box3D]],
    class_thresholds: dict[Category, float] | None = None,
) -> EvalReport:
    """Frame-aligned evaluation: match within each frame, pool pairs for the
    IoU means, and pool per-class TP/FP/N_gt counts across frames for AP.

    Raises FrameMismatchError when both sides have frames but none align,
    which almost always means two different sequences were compared.
    """
    pred_frames = {f for f, boxes in preds_by_frame.items() if boxes}
    gt_frames = {f for f, boxes in gts_by_frame.items() if boxes}
    if pred_frames and gt_frames and not (pred_frames & gt_frames):
        raise FrameMismatchError(
            f"prediction frames {sorted(pred_frames)} and ground-truth frames "
            f"{sorted(gt_frames)} do not overlap"
        )
    frames = sorted(pred_frames | gt_frames)

    all_pairs: list[MatchedPair] = []
    n_pred = n_gt = n_non_intersecting = 0
    # (variant, difficulty) -> class -> [tp, n_pred, n_gt]
    counts: dict[tuple[str, str], dict[Category, list[int]]] = {
        key: {} for key in (("bev", "strict"), ("bev", "easy"),
                            ("3d", "strict"), ("3d", "easy"))
    }
    for frame in frames:
        preds = preds_by_frame.get(frame, [])
        gts = gts_by_frame.get(frame, [])
        n_pred += len(preds)
        n_gt += len(gts)
        match = match_annotations(preds, gts)
        all_pairs.extend(match.pairs)
        n_non_intersecting += len(match.non_intersecting_preds)

        by_class_gt: dict[Category, list[Box3D]] = {}
        for g in gts:
            by_class_gt.setdefault(matching_category(g.category), []).append(g)
        by_class_pred: dict[Category, list[Box3D]] = {}
        for p in preds:
            by_class_pred.setdefault(matching_category(p.category), []).append(p)
        for (variant, difficulty), table in counts.items():
            iou_fn = bev_iou if variant == "bev" else iou_3d
            for cat, class_gts in by_class_gt.items():
                class_preds = by_class_pred.get(cat, [])
                threshold = class_threshold(cat, difficulty, class_thresholds)
                tp = _greedy_tp(class_preds, class_gts, iou_fn, threshold)
                cell = table.setdefault(cat, [0, 0, 0])
                cell[0] += tp
                cell[1] += len(class_preds)
                cell[2] += len(class_gts)
            # predictions of a class with no ground truth in this frame still
            # count as false positives for that class
            for cat, class_preds in by_class_pred.items():
                if cat not in by_class_gt:
                    cell = table.setdefault(cat, [0, 0, 0])
                    cell[1] += len(class_preds)

    per_class: dict[Category, ClassAP] = {}
    classes = sorted(
        {cat for table in counts.values() for cat, cell in table.items() if cell[2] > 0},
        key=lambda c: c.value,
    )
    for cat in classes:
        values = {}
        for key, table in counts.items():
            tp, np_, ng = table.get(cat, [0, 0, 0])
            values[key] = _ap_from_counts(tp, np_ - tp, ng)
        per_class[cat] = ClassAP(
            ap_bev_strict=values[("bev", "strict")],
            ap_bev_easy=values[("bev", "easy")],
            ap_3d_strict=values[("3d", "strict")],
            ap_3d_easy=values[("3d", "easy")],
        )

    if all_pairs:
        mb = sum(p.bev_iou for p in all_pairs) / len(all_pairs)
        m3 = sum(p.iou_3d for p in all_pairs) / len(all_pairs)
    else:
        mb = m3 = None
    return EvalReport(
        mean_bev_iou=mb,
        mean_3d_iou=m3,
        per_class=per_class,
        n_pred=n_pred,
        n_gt=n_gt,
        n_matched=len(all_pairs),
        n_non_intersecting=n_non_intersecting,
        frames=tuple(frames),
    )


def _fmt_pct(value: float | None) -> str:
    return "absent" if value is None else f"{100.0 * value:.2f}"


def render_report(report: EvalReport) -> str:
    """Human-readable table aligned with the machine-readable dict: one row
    per class with BEV/3D AP at both difficulty levels, plus the IoU means."""
    lines = []
    lines.append(f"Frames evaluated: {len(report.frames)}   "
                 f"predictions: {report.n_pred}   ground truths: {report.n_gt}")
    lines.append(f"Matched pairs: {report.n_matched}   "
                 f"non-intersecting predictions: {report.n_non_intersecting}")
    lines.append(f"Mean BEV IoU (%): {_fmt_pct(report.mean_bev_iou)}")
    lines.append(f"Mean 3D IoU (%):  {_fmt_pct(report.mean_3d_iou)}")
    header = (f"{'Class':<16}{'BEV AP strict':>14}{'BEV AP easy':>13}"
              f"{'3D AP strict':>14}{'3D AP easy':>12}")
    lines.append("")
    lines.append(header)
    lines.append("-" * len(header))
    for cat, ap in sorted(report.per_class.items(), key=lambda kv: kv[0].value):
        lines.append(
            f"{cat.value:<16}{100 * ap.ap_bev_strict:>14.2f}{100 * ap.ap_bev_easy:>13.2f}"
            f"{100 * ap.ap_3d_strict:>14.2f}{100 * ap.ap_3d_easy:>12.2f}"
        )
    if not report.per_class:
        lines.append("(no classes with ground truth)")
    return "\n".join(lines) + "\n"
