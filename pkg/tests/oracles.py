"""Shared independent oracles used by the metrics and acceptance tests."""

import numpy as np

from aerobust import geometry
from aerobust.dota import DetectionRecord, GroundTruthRecord


def square(x, y, size=10.0):
    return np.array([[x, y], [x + size, y], [x + size, y + size], [x, y + size]])


def gt(x, y, size=10.0, cat="plane", image="P1", difficult=False):
    return GroundTruthRecord(image, square(x, y, size), cat, difficult)


def det(x, y, score, size=10.0, cat="plane", image="P1"):
    return DetectionRecord(image, cat, score, square(x, y, size))


def brute_force_ap(dets, gts, iou_thresh=0.5, interp="voc07_11point"):
    """Independent literal re-derivation of ranked-matching AP in percent."""
    classes = sorted({g.category for g in gts})
    per_class = {}
    for cat in classes:
        class_gts = [g for g in gts if g.category == cat]
        if all(g.difficult for g in class_gts):
            continue
        n_positive = sum(1 for g in class_gts if not g.difficult)
        class_dets = [d for d in dets if d.category == cat]
        order = sorted(range(len(class_dets)),
                       key=lambda i: (-class_dets[i].score, i))
        taken = set()
        flags = []  # "tp" | "fp" | "ignore"
        for i in order:
            d = class_dets[i]
            best_iou, best_j = 0.0, None
            for j, g in enumerate(class_gts):
                if g.image_id != d.image_id or j in taken:
                    continue
                iou = geometry.rotated_iou(d.box, g.box)
                if iou > best_iou:
                    best_iou, best_j = iou, j
            if best_j is not None and best_iou >= iou_thresh:
                if class_gts[best_j].difficult:
                    flags.append("ignore")
                else:
                    taken.add(best_j)
                    flags.append("tp")
            else:
                flags.append("fp")
        tp = fp = 0
        points = []
        for flag in flags:
            if flag == "ignore":
                continue
            if flag == "tp":
                tp += 1
            else:
                fp += 1
            recall = tp / n_positive
            precision = tp / (tp + fp)
            points.append((recall, precision))
        if interp == "voc07_11point":
            total = 0.0
            for level in np.linspace(0.0, 1.0, 11):
                candidates = [p for r, p in points if r >= level - 1e-12]
                total += max(candidates) if candidates else 0.0
            ap = total / 11.0
        else:
            ap = 0.0
            prev_recall = 0.0
            for r, _ in points:
                if r <= prev_recall:
                    continue
                envelope = max(p for rr, p in points if rr >= r - 1e-12)
                ap += (r - prev_recall) * envelope
                prev_recall = r
        per_class[cat] = ap * 100.0
    mean = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return per_class, mean


def random_case(rng):
    """Small random detection/GT layout with controlled overlap structure."""
    n_gt = rng.integers(0, 5)
    n_det = rng.integers(0, 7)
    cats = ["plane", "ship"]
    gts, dets = [], []
    anchors = []
    for _ in range(n_gt):
        x, y = rng.uniform(0, 80, 2)
        cat = cats[rng.integers(0, 2)]
        difficult = bool(rng.random() < 0.25)
        size = rng.uniform(8, 14)
        gts.append(gt(x, y, size, cat=cat, difficult=difficult))
        anchors.append((x, y, size, cat))
    if not any(not g.difficult for g in gts):
        gts.append(gt(5, 5, 10, cat="plane"))
        anchors.append((5, 5, 10, "plane"))
    present = sorted({g.category for g in gts})
    for _ in range(n_det):
        score = round(float(rng.random()), 2)
        cat = present[rng.integers(0, len(present))]
        if anchors and rng.random() < 0.7:
            x, y, size, anchor_cat = anchors[rng.integers(0, len(anchors))]
            if rng.random() < 0.8:
                cat = anchor_cat
            jitter = rng.uniform(-4, 4, 2)
            dets.append(det(x + jitter[0], y + jitter[1], score, size, cat=cat))
        else:
            x, y = rng.uniform(0, 80, 2)
            dets.append(det(x, y, score, rng.uniform(8, 14), cat=cat))
    return dets, gts
