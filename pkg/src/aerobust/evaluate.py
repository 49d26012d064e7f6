"""Turn detection trees into an AP matrix.

Expected detections layout, one directory of Task1_<class>.txt files
per cell:

    <dets>/clean/
    <dets>/<kind>/<severity>/        for all 19 kinds x 5 severities
    <dets>/clouds/                   optional

Ground truth is a labelTxt-style directory of <image_id>.txt files (a
dataset root containing labelTxt/ also works).
"""

from __future__ import annotations

from pathlib import Path

from . import dota
from .errors import IncompleteMatrixError, ParameterError
from .metrics import EvalMatrix, average_precision
from .schedule import CORRUPTION_KINDS, SEVERITIES


def _resolve_gt_dir(gt_path: str | Path) -> Path:
    p = Path(gt_path)
    if (p / "labelTxt").is_dir():
        return p / "labelTxt"
    if p.is_dir():
        return p
    raise ParameterError(f"ground-truth directory {p} does not exist")


def _cell_ap(cell_dir: Path, gts, iou: float, interp: str,
             merge_tiles: bool, nms_iou: float) -> float:
    dets = dota.read_detection_dir(cell_dir)
    if merge_tiles:
        dets = dota.merge_detections(dets, plan=None, nms_iou=nms_iou)
    _, mean_ap = average_precision(dets, gts, iou_thresh=iou, interp=interp)
    return mean_ap


def evaluate_tree(
    dets_root: str | Path,
    gt_path: str | Path,
    iou: float = 0.5,
    interp: str = "voc07_11point",
    merge_tiles: bool = False,
    nms_iou: float = 0.1,
) -> EvalMatrix:
    root = Path(dets_root)
    if not root.is_dir():
        raise ParameterError(f"detections directory {root} does not exist")
    gt_dir = _resolve_gt_dir(gt_path)
    gt_map = dota.read_annotation_dir(gt_dir)
    gts = [rec for recs in gt_map.values() for rec in recs]

    clean_dir = root / "clean"
    if not clean_dir.is_dir():
        raise IncompleteMatrixError("missing clean detections directory 'clean'")
    matrix = EvalMatrix()
    matrix.ap_clean = _cell_ap(clean_dir, gts, iou, interp, merge_tiles, nms_iou)
    for kind in CORRUPTION_KINDS:
        for severity in SEVERITIES:
            cell = root / kind / str(severity)
            if not cell.is_dir():
                raise IncompleteMatrixError(f"missing AP cell {kind}/{severity}")
            matrix.set_cell(
                kind, severity, _cell_ap(cell, gts, iou, interp, merge_tiles, nms_iou)
            )
    clouds_dir = root / "clouds"
    if clouds_dir.is_dir():
        matrix.ap_clouds = _cell_ap(clouds_dir, gts, iou, interp, merge_tiles, nms_iou)
    return matrix
