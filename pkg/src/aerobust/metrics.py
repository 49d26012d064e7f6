"""Rotated-box average precision and the robustness aggregates built on
top of it: mPC (mean AP over a complete corruption/severity grid), rPC
(mPC relative to clean AP), per-category rPC, rPC for the cloud set,
and the per-severity mean curve.

All AP values are percentages in [0, 100].
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, IncompleteMatrixError, ParameterError, ParseError
from .geometry import rotated_iou
from .schedule import CORRUPTION_CATEGORIES, CORRUPTION_KINDS, SEVERITIES

INTERP_MODES = ("voc07_11point", "continuous")


# ---------------------------------------------------------------------------
# average precision

def _match_class(dets, gts, iou_thresh):
    """Greedy score-descending matching for one class.

    Returns (flags, n_positive) where flags is one entry per detection in
    score order: 1 true positive, 0 false positive, None ignored (the
    detection matched a difficult box).  Difficult boxes are never
    consumed and never counted in n_positive.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    by_image: dict[str, list[int]] = {}
    for gi, gt in enumerate(gts):
        by_image.setdefault(gt.image_id, []).append(gi)
    matched = [False] * len(gts)
    flags: list[int | None] = []
    for di in order:
        det = dets[di]
        best_iou = 0.0
        best_gi = -1
        for gi in by_image.get(det.image_id, ()):
            if matched[gi]:
                continue
            iou = rotated_iou(det.box, gts[gi].box)
            if iou > best_iou:
                best_iou = iou
                best_gi = gi
        if best_gi >= 0 and best_iou >= iou_thresh:
            if gts[best_gi].difficult:
                flags.append(None)
            else:
                matched[best_gi] = True
                flags.append(1)
        else:
            flags.append(0)
    n_positive = sum(1 for gt in gts if not gt.difficult)
    return flags, n_positive


def _pr_points(flags, n_positive):
    recalls = []
    precisions = []
    tp = 0
    fp = 0
    for flag in flags:
        if flag is None:
            continue
        if flag:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / n_positive)
        precisions.append(tp / (tp + fp))
    return np.array(recalls), np.array(precisions)


def _ap_voc07(recalls, precisions):
    ap = 0.0
    for t in np.linspace(0.0, 1.0, 11):
        mask = recalls >= t
        ap += precisions[mask].max() if mask.any() else 0.0
    return ap / 11.0


def _ap_continuous(recalls, precisions):
    mrec = np.concatenate([[0.0], recalls, [1.0]])
    mpre = np.concatenate([[0.0], precisions, [0.0]])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def average_precision(dets, gts, iou_thresh: float = 0.5,
                      interp: str = "voc07_11point"):
    """Per-class AP plus the class mean, all in percent.

    Classes with no counted (non-difficult) boxes are left out of the
    mean.  Detections for classes absent from the ground truth are
    rejected so label mismatches fail loudly.
    """
    if interp not in INTERP_MODES:
        raise ParameterError(f"unknown interpolation {interp!r}; valid: {', '.join(INTERP_MODES)}")
    if not 0.0 < iou_thresh <= 1.0:
        raise ParameterError(f"iou threshold {iou_thresh} outside (0, 1]")
    gt_classes = {gt.category for gt in gts}
    det_classes = {d.category for d in dets}
    unknown = sorted(det_classes - gt_classes)
    if unknown:
        raise ConfigurationError(
            f"detections name classes absent from the ground truth: {', '.join(unknown)}"
        )
    per_class: dict[str, float] = {}
    for category in sorted(gt_classes):
        class_gts = [g for g in gts if g.category == category]
        n_positive = sum(1 for g in class_gts if not g.difficult)
        if n_positive == 0:
            continue
        class_dets = [d for d in dets if d.category == category]
        flags, _ = _match_class(class_dets, class_gts, iou_thresh)
        recalls, precisions = _pr_points(flags, n_positive)
        if len(recalls) == 0:
            per_class[category] = 0.0
            continue
        if interp == "voc07_11point":
            ap = _ap_voc07(recalls, precisions)
        else:
            ap = _ap_continuous(recalls, precisions)
        per_class[category] = float(ap * 100.0)
    mean = float(np.mean(list(per_class.values()))) if per_class else 0.0
    return per_class, mean


# ---------------------------------------------------------------------------
# robustness aggregates

@dataclass
class EvalMatrix:
    """AP values per (kind, severity) cell plus clean and optional clouds."""

    ap: dict[tuple[str, int], float] = field(default_factory=dict)
    ap_clean: float | None = None
    ap_clouds: float | None = None

    def set_cell(self, kind: str, severity: int, value: float) -> None:
        if kind not in CORRUPTION_KINDS:
            raise ParameterError(f"unknown corruption kind {kind!r}")
        if severity not in SEVERITIES:
            raise ParameterError(f"severity {severity} outside 1..5")
        if not 0.0 <= value <= 100.0:
            raise ParameterError(f"AP {value} outside [0, 100]")
        self.ap[(kind, severity)] = float(value)

    def require_complete(self, kinds=CORRUPTION_KINDS) -> None:
        for kind in kinds:
            for severity in SEVERITIES:
                if (kind, severity) not in self.ap:
                    raise IncompleteMatrixError(f"missing AP cell {kind}/{severity}")

    def kind_mean(self, kind: str) -> float:
        return float(np.mean([self.ap[(kind, s)] for s in SEVERITIES]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["kind", "severity", "ap"])
        for kind in CORRUPTION_KINDS:
            for severity in SEVERITIES:
                if (kind, severity) in self.ap:
                    writer.writerow([kind, severity, repr(self.ap[(kind, severity)])])
        if self.ap_clean is not None:
            writer.writerow(["clean", "", repr(self.ap_clean)])
        if self.ap_clouds is not None:
            writer.writerow(["clouds", "", repr(self.ap_clouds)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, source: str = "matrix") -> "EvalMatrix":
        matrix = cls()
        reader = csv.reader(io.StringIO(text))
        rows = [r for r in reader if r and any(cell.strip() for cell in r)]
        if not rows:
            raise ParseError(f"{source}: empty matrix file")
        start = 1 if [c.strip().lower() for c in rows[0][:3]] == ["kind", "severity", "ap"] else 0
        for lineno, row in enumerate(rows[start:], start + 1):
            if len(row) != 3:
                raise ParseError(f"{source}:{lineno}: expected 3 columns, got {len(row)}")
            kind, severity, ap = (c.strip() for c in row)
            try:
                value = float(ap)
            except ValueError as exc:
                raise ParseError(f"{source}:{lineno}: bad AP value {ap!r}") from exc
            if kind == "clean" and severity == "":
                matrix.ap_clean = value
            elif kind == "clouds" and severity == "":
                matrix.ap_clouds = value
            else:
                try:
                    matrix.set_cell(kind, int(severity) if severity else -1, value)
                except (ValueError, ParameterError) as exc:
                    raise ParseError(f"{source}:{lineno}: {exc}") from exc
        return matrix


def mpc(matrix: EvalMatrix) -> float:
    """Mean AP over the full 19-kind x 5-severity grid."""
    matrix.require_complete()
    return float(np.mean([matrix.kind_mean(kind) for kind in CORRUPTION_KINDS]))


def rpc(mpc_value: float, ap_clean: float) -> float:
    if ap_clean <= 0:
        raise ParameterError("clean AP must be positive for a relative score")
    return 100.0 * mpc_value / ap_clean


def category_rpc(matrix: EvalMatrix, category: str, ap_clean: float) -> float:
    """Severity-averaged AP over one category's kinds, relative to clean."""
    if category not in CORRUPTION_CATEGORIES:
        raise ParameterError(
            f"unknown category {category!r}; valid: {', '.join(CORRUPTION_CATEGORIES)}"
        )
    if ap_clean <= 0:
        raise ParameterError("clean AP must be positive for a relative score")
    kinds = CORRUPTION_CATEGORIES[category]
    matrix.require_complete(kinds)
    mean = float(np.mean([matrix.kind_mean(kind) for kind in kinds]))
    return 100.0 * mean / ap_clean


def rpc_clouds(ap_clouds: float, ap_clean: float) -> float:
    if ap_clean <= 0:
        raise ParameterError("clean AP must be positive for a relative score")
    return 100.0 * ap_clouds / ap_clean


def severity_curve(matrix: EvalMatrix) -> list[float]:
    """Mean AP over all kinds at each severity; its mean equals mpc()."""
    matrix.require_complete()
    return [
        float(np.mean([matrix.ap[(kind, s)] for kind in CORRUPTION_KINDS]))
        for s in SEVERITIES
    ]


def summarize(matrix: EvalMatrix) -> dict:
    """All aggregates the reports use, keyed by their table names."""
    value = mpc(matrix)
    out: dict = {
        "mPC": value,
        "severity_curve": severity_curve(matrix),
        "per_kind": {kind: matrix.kind_mean(kind) for kind in CORRUPTION_KINDS},
    }
    if matrix.ap_clean is not None:
        out["ap_clean"] = matrix.ap_clean
        out["rPC"] = rpc(value, matrix.ap_clean)
        for category in CORRUPTION_CATEGORIES:
            out[f"rPC_{category}"] = category_rpc(matrix, category, matrix.ap_clean)
    if matrix.ap_clouds is not None:
        out["ap_clouds"] = matrix.ap_clouds
        if matrix.ap_clean is not None:
            out["rPC_clouds"] = rpc_clouds(matrix.ap_clouds, matrix.ap_clean)
    return out
