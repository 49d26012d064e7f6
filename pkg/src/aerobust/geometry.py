"""Convex quadrilateral geometry: winding, clipping, rotated IoU, NMS.

Boxes are (4, 2) float64 arrays of (x, y) vertices.  Canonical winding
is positive shoelace area, which for image coordinates (y growing
downward) is the usual annotation order: start anywhere, go around the
box so area comes out positive.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import ParameterError


def signed_area(poly: np.ndarray) -> float:
    """Shoelace signed area of a closed polygon given as (N, 2) vertices."""
    p = np.asarray(poly, dtype=np.float64)
    x = p[:, 0]
    y = p[:, 1]
    return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_area(poly: np.ndarray) -> float:
    return abs(signed_area(poly))


def canonical_box(vertices) -> np.ndarray:
    """Validate and return a (4, 2) box with positive winding."""
    v = np.asarray(vertices, dtype=np.float64)
    if v.shape != (4, 2):
        raise ParameterError(f"box must have shape (4, 2), got {v.shape}")
    if signed_area(v) < 0:
        v = v[::-1].copy()
    return v


def box_from_flat(coords) -> np.ndarray:
    """(x1 y1 x2 y2 x3 y3 x4 y4) to a canonical (4, 2) box."""
    c = np.asarray(coords, dtype=np.float64)
    if c.shape != (8,):
        raise ParameterError(f"expected 8 coordinates, got {c.shape}")
    return canonical_box(c.reshape(4, 2))


def is_convex(poly: np.ndarray) -> bool:
    """True when all cross products share one sign (collinear edges allowed)."""
    p = np.asarray(poly, dtype=np.float64)
    n = len(p)
    sign = 0
    for i in range(n):
        a = p[i]
        b = p[(i + 1) % n]
        c = p[(i + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross > 1e-12:
            if sign < 0:
                return False
            sign = 1
        elif cross < -1e-12:
            if sign > 0:
                return False
            sign = -1
    return True


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew monotone chain; returns hull vertices with positive winding."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        out: list[np.ndarray] = []
        for q in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                if (a[0] - o[0]) * (q[1] - o[1]) - (a[1] - o[1]) * (q[0] - o[0]) <= 0:
                    out.pop()
                else:
                    break
            out.append(q)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1], dtype=np.float64)


def clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman: subject clipped by a convex positive-winding polygon."""
    out = [tuple(v) for v in np.asarray(subject, dtype=np.float64)]
    cl = np.asarray(clip, dtype=np.float64)
    m = len(cl)
    for i in range(m):
        if not out:
            break
        ax, ay = cl[i]
        bx, by = cl[(i + 1) % m]
        ex, ey = bx - ax, by - ay
        inp = out
        out = []
        px, py = inp[-1]
        prev_side = ex * (py - ay) - ey * (px - ax)
        for qx, qy in inp:
            side = ex * (qy - ay) - ey * (qx - ax)
            if side >= 0:
                if prev_side < 0:
                    t = prev_side / (prev_side - side)
                    out.append((px + t * (qx - px), py + t * (qy - py)))
                out.append((qx, qy))
            elif prev_side >= 0:
                t = prev_side / (prev_side - side)
                out.append((px + t * (qx - px), py + t * (qy - py)))
            px, py, prev_side = qx, qy, side
    return np.array(out, dtype=np.float64) if out else np.empty((0, 2))


def intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    inter = clip_polygon(a, b)
    if len(inter) < 3:
        return 0.0
    return polygon_area(inter)


def rotated_iou(a, b) -> float:
    """Intersection over union of two convex quadrilaterals."""
    box_a = canonical_box(a)
    box_b = canonical_box(b)
    area_a = polygon_area(box_a)
    area_b = polygon_area(box_b)
    if area_a < 1e-12 or area_b < 1e-12:
        warnings.warn("degenerate zero-area box; IoU defined as 0", stacklevel=2)
        return 0.0
    inter = intersection_area(box_a, box_b)
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return float(inter / union)


def nms_rotated(boxes, scores, iou_threshold: float = 0.1) -> list[int]:
    """Greedy non-maximum suppression on rotated boxes.

    Returns indices of kept boxes, score-descending; ties keep input
    order.  A candidate is suppressed when its IoU with any already-kept
    box reaches the threshold.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ParameterError(f"iou threshold {iou_threshold} outside [0, 1]")
    arr = [canonical_box(b) for b in boxes]
    sc = np.asarray(scores, dtype=np.float64)
    if len(arr) != len(sc):
        raise ParameterError("boxes and scores length mismatch")
    order = sorted(range(len(arr)), key=lambda i: (-sc[i], i))
    keep: list[int] = []
    for i in order:
        ok = True
        for j in keep:
            if rotated_iou(arr[i], arr[j]) >= iou_threshold:
                ok = False
                break
        if ok:
            keep.append(i)
    return keep
