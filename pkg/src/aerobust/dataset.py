"""Batch jobs over dataset trees: corrupt every image at the requested
kinds and severities, or composite clouds onto every image.

Output layout for corruption is <out>/<kind>/<severity>/<relative path>,
for clouds <out>/clouds/<relative path>.  Annotation text files found in
the input tree are copied unchanged into each output variant, since
labels are reused verbatim for corrupted imagery.  Outputs are written
as PNG so pixels survive the trip to disk exactly.

Per-image seeds come from derive_seed(global_seed, image_id, kind,
severity) with image_id the extension-less relative path, so a rerun
with the same seed reproduces every byte no matter the thread count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import clouds as cloudmod
from . import raster
from .corruptions import CorruptionSpec, corrupt
from .errors import ParameterError
from .schedule import CORRUPTION_KINDS, SEVERITIES, SeveritySchedule, default_schedule

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def discover_images(root: str | Path) -> list[Path]:
    """All image files under a directory, stable order."""
    r = Path(root)
    if not r.is_dir():
        raise ParameterError(f"input directory {r} does not exist")
    files = [p for p in sorted(r.rglob("*")) if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()]
    return files


def discover_annotations(root: str | Path) -> list[Path]:
    r = Path(root)
    return [p for p in sorted(r.rglob("*.txt")) if p.is_file()]


def image_id_for(root: Path, path: Path) -> str:
    return path.relative_to(root).with_suffix("").as_posix()


def _out_path(out_dir: Path, root: Path, path: Path) -> Path:
    return (out_dir / path.relative_to(root)).with_suffix(".png")


def _copy_annotations(in_root: Path, out_dir: Path, annotations: list[Path]) -> None:
    for ann in annotations:
        dest = out_dir / ann.relative_to(in_root)
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_bytes(ann.read_bytes())


def corrupt_dataset(
    in_root: str | Path,
    out_root: str | Path,
    kinds=CORRUPTION_KINDS,
    severities=SEVERITIES,
    global_seed: int = 0,
    schedule: SeveritySchedule | None = None,
    jobs: int | None = None,
) -> dict:
    """Corrupt every image for every (kind, severity); returns a job report."""
    src = Path(in_root)
    dst = Path(out_root)
    kinds = tuple(kinds)
    severities = tuple(severities)
    for kind in kinds:
        if kind not in CORRUPTION_KINDS:
            raise ParameterError(
                f"unknown corruption kind {kind!r}; valid: {', '.join(CORRUPTION_KINDS)}"
            )
    for severity in severities:
        if severity not in SEVERITIES:
            raise ParameterError(f"severity {severity} outside 1..5")
    sched = schedule if schedule is not None else default_schedule()
    images = discover_images(src)
    annotations = discover_annotations(src)
    failures: list[dict] = []
    counts: dict[str, int] = {kind: 0 for kind in kinds}

    def process(path: Path):
        image_id = image_id_for(src, path)
        done: list[str] = []
        try:
            image = raster.load_image(path)
        except Exception as exc:  # noqa: BLE001 - per-item error policy
            return image_id, done, f"{path}: {exc}"
        for kind in kinds:
            for severity in severities:
                seed = raster.derive_seed(global_seed, image_id, kind, severity)
                out = corrupt(image, CorruptionSpec(kind, severity, seed), sched)
                dest = _out_path(dst / kind / str(severity), src, path)
                dest.parent.mkdir(parents=True, exist_ok=True)
                raster.save_image(dest, out)
                done.append(kind)
        return image_id, done, None

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(process, images))
    ok_images = 0
    for image_id, done, error in results:
        if error is not None:
            failures.append({"item": image_id, "error": error})
            continue
        ok_images += 1
        for kind in done:
            counts[kind] += 1
    for kind in kinds:
        for severity in severities:
            _copy_annotations(src, dst / kind / str(severity), annotations)
    return {
        "command": "corrupt",
        "global_seed": global_seed,
        "schedule_checksum": sched.checksum,
        "kinds": list(kinds),
        "severities": list(severities),
        "images_ok": ok_images,
        "outputs": sum(counts.values()),
        "per_kind_outputs": counts,
        "failures": failures,
    }


def cloudify_dataset(
    in_root: str | Path,
    out_root: str | Path,
    pool: list[cloudmod.CloudSource],
    global_seed: int = 0,
    jobs: int | None = None,
) -> dict:
    """Composite one seeded-random cloud source onto every image."""
    src = Path(in_root)
    dst = Path(out_root)
    if not pool:
        raise ParameterError("cloud pool is empty")
    images = discover_images(src)
    annotations = discover_annotations(src)
    ingredients = [cloudmod.extract_ingredient(s) for s in pool]
    usage = {s.path or f"source-{i}": 0 for i, s in enumerate(pool)}
    failures: list[dict] = []

    def process(path: Path):
        image_id = image_id_for(src, path)
        try:
            image = raster.load_image(path)
        except Exception as exc:  # noqa: BLE001
            return image_id, None, f"{path}: {exc}"
        rng = raster.rng_stream(raster.derive_seed(global_seed, image_id, "clouds", 0))
        idx = int(rng.integers(0, len(pool)))
        h, w = image.shape[:2]
        fitted = cloudmod.fit_to(ingredients[idx], h, w, rng)
        out = cloudmod.cloud_composite(image.astype(np.float64), fitted)
        dest = _out_path(dst / "clouds", src, path)
        dest.parent.mkdir(parents=True, exist_ok=True)
        raster.save_image(dest, out)
        return image_id, idx, None

    with ThreadPoolExecutor(max_workers=jobs) as executor:
        results = list(executor.map(process, images))
    ok = 0
    for image_id, idx, error in results:
        if error is not None:
            failures.append({"item": image_id, "error": error})
            continue
        ok += 1
        key = pool[idx].path or f"source-{idx}"
        usage[key] += 1
    _copy_annotations(src, dst / "clouds", annotations)
    return {
        "command": "cloudify",
        "global_seed": global_seed,
        "pool_size": len(pool),
        "gammas": {s.path or f"source-{i}": s.gamma for i, s in enumerate(pool)},
        "images_ok": ok,
        "outputs": ok,
        "source_usage": usage,
        "failures": failures,
    }


def split_dataset(
    in_root: str | Path,
    out_root: str | Path,
    tile_size: int = 1024,
    overlap: int = 200,
    keep_fraction: float = 0.7,
) -> dict:
    """Tile images (and their annotations) into fixed-size patches."""
    from . import dota

    src = Path(in_root)
    dst = Path(out_root)
    image_dir = src / "images" if (src / "images").is_dir() else src
    label_dir = src / "labelTxt"
    images = [
        p for p in sorted(image_dir.iterdir())
        if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    ] if image_dir.is_dir() else []
    if not images:
        raise ParameterError(f"no images found under {image_dir}")
    out_images = dst / "images"
    out_labels = dst / "labelTxt"
    out_images.mkdir(parents=True, exist_ok=True)
    out_labels.mkdir(parents=True, exist_ok=True)
    tiles_written = 0
    failures: list[dict] = []
    for path in images:
        image_id = path.stem
        try:
            image = raster.load_image(path)
        except Exception as exc:  # noqa: BLE001
            failures.append({"item": image_id, "error": f"{path}: {exc}"})
            continue
        h, w = image.shape[:2]
        plan = dota.plan_tiles(w, h, tile_size, overlap)
        ann_path = label_dir / f"{image_id}.txt"
        if ann_path.is_file():
            records = dota.parse_annotations(
                ann_path.read_text(encoding="utf-8"), image_id, source=str(ann_path)
            )
        else:
            warnings.warn(f"no annotations for {image_id}; emitting empty labels", stacklevel=2)
            records = []
        per_tile = dota.split_ground_truth(records, plan, keep_fraction)
        for (x, y) in plan.offsets:
            name = dota.tile_name(image_id, x, y)
            tile = dota.extract_tile(image, x, y, tile_size)
            raster.save_image(out_images / f"{name}.png", tile)
            (out_labels / f"{name}.txt").write_text(
                dota.emit_annotations(per_tile[(x, y)]), encoding="utf-8"
            )
            tiles_written += 1
    return {
        "command": "split",
        "tile_size": tile_size,
        "overlap": overlap,
        "keep_fraction": keep_fraction,
        "images": len(images) - len(failures),
        "tiles": tiles_written,
        "failures": failures,
    }
