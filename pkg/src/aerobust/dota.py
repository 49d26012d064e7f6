"""Plain-text annotation and detection formats, plus tiling of large
scenes and merging of per-tile detections.

Annotation files: optional "imagesource:" / "gsd:" header lines, then
one instance per line, "x1 y1 x2 y2 x3 y3 x4 y4 category difficult".
Detection files (one per class): "image_id score x1 y1 ... y4".
Tile names follow "<image_id>__<x>__<y>" with the pixel offsets of the
tile origin.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path

import numpy as np

from . import geometry
from .errors import ParameterError, ParseError

DOTA_CLASSES = (
    "plane",
    "baseball-diamond",
    "bridge",
    "ground-track-field",
    "small-vehicle",
    "large-vehicle",
    "ship",
    "tennis-court",
    "basketball-court",
    "storage-tank",
    "soccer-ball-field",
    "roundabout",
    "harbor",
    "swimming-pool",
    "helicopter",
)

TILE_SIZE = 1024
TILE_OVERLAP = 200

_TILE_NAME = re.compile(r"^(?P<stem>.+)__(?P<x>\d+)__(?P<y>\d+)$")


@dataclass(frozen=True)
class GroundTruthRecord:
    image_id: str
    box: np.ndarray
    category: str
    difficult: bool = False


@dataclass(frozen=True)
class DetectionRecord:
    image_id: str
    category: str
    score: float
    box: np.ndarray


@dataclass(frozen=True)
class TilePlan:
    width: int
    height: int
    tile_size: int
    overlap: int
    offsets: tuple[tuple[int, int], ...]


def _fmt(v: float) -> str:
    """Exact textual form: integers stay integers, floats keep full precision."""
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def _parse_box_tokens(tokens, where: str) -> np.ndarray:
    try:
        coords = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"{where}: non-numeric coordinate: {exc}") from exc
    return coords


def parse_annotations(text: str, image_id: str = "", source: str = "annotations") -> list[GroundTruthRecord]:
    """Parse one annotation file.  Non-convex boxes are repaired to their
    convex hull with a warning."""
    records: list[GroundTruthRecord] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.strip()
        if not body:
            continue
        if body.startswith("imagesource:") or body.startswith("gsd:"):
            continue
        tokens = body.split()
        if len(tokens) != 10:
            raise ParseError(f"{source}:{lineno}: expected 10 tokens, got {len(tokens)}")
        coords = _parse_box_tokens(tokens[:8], f"{source}:{lineno}")
        category = tokens[8]
        if tokens[9] not in ("0", "1"):
            raise ParseError(f"{source}:{lineno}: difficult flag must be 0 or 1, got {tokens[9]!r}")
        verts = np.array(coords, dtype=np.float64).reshape(4, 2)
        if not geometry.is_convex(verts):
            warnings.warn(
                f"{source}:{lineno}: non-convex box repaired to its convex hull",
                stacklevel=2,
            )
            hull = geometry.convex_hull(verts)
            while len(hull) < 4:
                hull = np.vstack([hull, hull[-1:]])
            verts = hull[:4]
        box = geometry.canonical_box(verts)
        records.append(GroundTruthRecord(image_id=image_id, box=box, category=category,
                                         difficult=tokens[9] == "1"))
    return records


def emit_annotations(records) -> str:
    lines = []
    for rec in records:
        coords = " ".join(_fmt(v) for v in np.asarray(rec.box).reshape(-1))
        lines.append(f"{coords} {rec.category} {1 if rec.difficult else 0}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_detections(text: str, category: str, source: str = "detections") -> list[DetectionRecord]:
    """Parse one per-class detection file."""
    records: list[DetectionRecord] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.strip()
        if not body:
            continue
        tokens = body.split()
        if len(tokens) != 10:
            raise ParseError(f"{source}:{lineno}: expected 10 tokens, got {len(tokens)}")
        image_id = tokens[0]
        try:
            score = float(tokens[1])
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: non-numeric score {tokens[1]!r}") from exc
        if not 0.0 <= score <= 1.0:
            raise ParseError(f"{source}:{lineno}: score {score} outside [0, 1]")
        coords = _parse_box_tokens(tokens[2:], f"{source}:{lineno}")
        box = geometry.box_from_flat(coords)
        records.append(DetectionRecord(image_id=image_id, category=category, score=score, box=box))
    return records


def emit_detections(records) -> str:
    lines = []
    for rec in records:
        coords = " ".join(_fmt(v) for v in np.asarray(rec.box).reshape(-1))
        lines.append(f"{rec.image_id} {_fmt(rec.score)} {coords}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# tiling

def _axis_offsets(dim: int, tile_size: int, stride: int) -> list[int]:
    if dim <= tile_size:
        return [0]
    offsets = list(range(0, dim - tile_size + 1, stride))
    if offsets[-1] != dim - tile_size:
        offsets.append(dim - tile_size)
    return offsets


def plan_tiles(width: int, height: int, tile_size: int = TILE_SIZE,
               overlap: int = TILE_OVERLAP) -> TilePlan:
    """Sliding-window origins covering the image, edge tiles clamped."""
    if width < 1 or height < 1:
        raise ParameterError(f"image size {width}x{height} must be at least 1x1")
    if overlap >= tile_size:
        raise ParameterError(f"overlap {overlap} must be smaller than tile size {tile_size}")
    if overlap < 0:
        raise ParameterError("overlap must be non-negative")
    stride = tile_size - overlap
    xs = _axis_offsets(width, tile_size, stride)
    ys = _axis_offsets(height, tile_size, stride)
    offsets = tuple((x, y) for y, x in product(ys, xs))
    return TilePlan(width=width, height=height, tile_size=tile_size, overlap=overlap,
                    offsets=offsets)


def tile_name(image_id: str, x: int, y: int) -> str:
    return f"{image_id}__{x}__{y}"


def parse_tile_name(name: str) -> tuple[str, int, int]:
    m = _TILE_NAME.match(name)
    if not m:
        raise ParameterError(f"{name!r} is not a '<image_id>__<x>__<y>' tile name")
    return m.group("stem"), int(m.group("x")), int(m.group("y"))


def extract_tile(image: np.ndarray, x: int, y: int, tile_size: int = TILE_SIZE) -> np.ndarray:
    """Copy one tile, zero-padding past the image edge."""
    arr = np.asarray(image)
    h, w = arr.shape[:2]
    out_shape = (tile_size, tile_size) + arr.shape[2:]
    out = np.zeros(out_shape, dtype=arr.dtype)
    ys = slice(y, min(y + tile_size, h))
    xs = slice(x, min(x + tile_size, w))
    out[: ys.stop - ys.start, : xs.stop - xs.start] = arr[ys, xs]
    return out


def split_ground_truth(records, plan: TilePlan, keep_fraction: float = 0.7):
    """Assign boxes to tiles by contained-area fraction.

    A box lands in every tile holding at least keep_fraction of its
    area; a partial box (fraction in (0, keep_fraction)) still lands
    there but marked difficult.  Vertices are translated to tile-local
    coordinates, never clipped, so back-translation is exact.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ParameterError(f"keep_fraction {keep_fraction} outside (0, 1]")
    out: dict[tuple[int, int], list[GroundTruthRecord]] = {xy: [] for xy in plan.offsets}
    t = plan.tile_size
    for rec in records:
        area = geometry.polygon_area(rec.box)
        if area < 1e-12:
            warnings.warn(f"zero-area box in {rec.image_id or 'annotations'} skipped", stacklevel=2)
            continue
        for (x, y) in plan.offsets:
            rect = np.array([[x, y], [x + t, y], [x + t, y + t], [x, y + t]], dtype=np.float64)
            inside = geometry.intersection_area(rec.box, rect)
            frac = inside / area
            if frac <= 0:
                continue
            local = rec.box - np.array([x, y], dtype=np.float64)
            tile_id = tile_name(rec.image_id, x, y) if rec.image_id else ""
            out[(x, y)].append(
                replace(rec, image_id=tile_id, box=local,
                        difficult=rec.difficult or frac < keep_fraction)
            )
    return out


def merge_detections(records, plan: TilePlan | None = None, nms_iou: float = 0.1) -> list[DetectionRecord]:
    """Translate tile-local detections to image coordinates and suppress
    duplicates from overlapping tiles with rotated NMS.

    Records whose image_id has no "__x__y" suffix are taken as already
    global, so merging a merged set is a no-op (idempotence).
    """
    translated: list[DetectionRecord] = []
    for rec in records:
        try:
            stem, x, y = parse_tile_name(rec.image_id)
        except ParameterError:
            translated.append(rec)
            continue
        if plan is not None and (x, y) not in plan.offsets:
            raise ParameterError(f"detection tile offset ({x}, {y}) not in the tile plan")
        translated.append(
            replace(rec, image_id=stem, box=rec.box + np.array([x, y], dtype=np.float64))
        )
    groups: dict[tuple[str, str], list[DetectionRecord]] = {}
    for rec in translated:
        groups.setdefault((rec.image_id, rec.category), []).append(rec)
    merged: list[DetectionRecord] = []
    for key in sorted(groups):
        recs = groups[key]
        keep = geometry.nms_rotated([r.box for r in recs], [r.score for r in recs], nms_iou)
        merged.extend(recs[i] for i in sorted(keep))
    return merged


# ---------------------------------------------------------------------------
# directory-level helpers

def read_annotation_dir(gt_dir: str | Path) -> dict[str, list[GroundTruthRecord]]:
    """Load every <image_id>.txt under a labelTxt-style directory."""
    d = Path(gt_dir)
    if not d.is_dir():
        raise ParameterError(f"annotation directory {d} does not exist")
    out: dict[str, list[GroundTruthRecord]] = {}
    for path in sorted(d.glob("*.txt")):
        image_id = path.stem
        out[image_id] = parse_annotations(path.read_text(encoding="utf-8"), image_id,
                                          source=str(path))
    return out


def read_detection_dir(det_dir: str | Path) -> list[DetectionRecord]:
    """Load every Task1_<class>.txt detection file in a directory."""
    d = Path(det_dir)
    if not d.is_dir():
        raise ParameterError(f"detection directory {d} does not exist")
    records: list[DetectionRecord] = []
    for path in sorted(d.glob("Task1_*.txt")):
        category = path.stem[len("Task1_"):]
        records.extend(parse_detections(path.read_text(encoding="utf-8"), category,
                                        source=str(path)))
    return records


def write_detection_dir(det_dir: str | Path, records) -> None:
    d = Path(det_dir)
    d.mkdir(parents=True, exist_ok=True)
    by_cat: dict[str, list[DetectionRecord]] = {}
    for rec in records:
        by_cat.setdefault(rec.category, []).append(rec)
    for category, recs in sorted(by_cat.items()):
        (d / f"Task1_{category}.txt").write_text(emit_detections(recs), encoding="utf-8")
