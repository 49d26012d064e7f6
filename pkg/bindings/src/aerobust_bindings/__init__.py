"""In-process bindings for the aerobust corruption and evaluation primitives.

Two functions are exposed for integration into training and evaluation
pipelines:

* :func:`bind_corrupt` applies one corruption to an 8-bit RGB array and
  returns a new array.
* :func:`bind_evaluate` scores a detection tree (or a precomputed AP
  matrix CSV) and returns the robustness aggregates as a plain mapping.

Both produce results identical to the ``aerobust`` command line for the
same inputs; JPEG-compressed outputs are compared after decoding.  The
boundary accepts only H x W x 3 uint8 arrays, never mutates its inputs,
and keeps no global state, so calls are safe from multiple threads.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

import aerobust
from aerobust import CORRUPTION_KINDS, CorruptionSpec, corrupt
from aerobust.evaluate import evaluate_tree
from aerobust.metrics import EvalMatrix, summarize
from aerobust.schedule import SEVERITIES

__version__ = aerobust.__version__

__all__ = ["bind_corrupt", "bind_evaluate", "__version__"]

_EVALUATE_DEFAULTS = {
    "iou": 0.5,
    "interp": "voc07_11point",
    "merge_tiles": False,
    "nms_iou": 0.1,
    "matrix": None,
}


def bind_corrupt(array, kind: str, severity: int, seed: int) -> np.ndarray:
    """Corrupted copy of an H x W x 3 uint8 array.

    The result is pixel-identical to what the command-line corrupt path
    writes for the same derived seed.  The input array is left untouched.
    """
    arr = np.asarray(array)
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[-1] != 3:
        raise TypeError(
            f"expected an H x W x 3 uint8 array, got shape {arr.shape} dtype {arr.dtype}"
        )
    if kind not in CORRUPTION_KINDS:
        raise ValueError(
            f"unknown corruption {kind!r}; valid kinds: {', '.join(CORRUPTION_KINDS)}"
        )
    if severity not in SEVERITIES:
        raise ValueError(
            f"severity must be one of {list(SEVERITIES)}, got {severity!r}"
        )
    return corrupt(arr, CorruptionSpec(kind, int(severity), int(seed)))


def bind_evaluate(dets_path=None, gts_path=None, options=None) -> dict:
    """Robustness aggregates for a detection tree, as a plain dict.

    ``dets_path`` holds per-cell detection directories (``clean/``,
    ``<kind>/<severity>/``, optional ``clouds/``) and ``gts_path`` the
    ground-truth annotations.  ``options`` may override ``iou``,
    ``interp``, ``merge_tiles`` and ``nms_iou``; alternatively
    ``options={"matrix": path}`` scores a precomputed AP matrix CSV, in
    which case both paths must be omitted.

    The mapping carries ``mPC``, the severity curve, severity-averaged
    per-kind APs, the full per-cell grid under ``ap_grid``, and, when
    clean AP is present, ``rPC`` plus the per-category and cloud
    variants.  Values equal the command-line ``report.json`` exactly.
    """
    opts = dict(_EVALUATE_DEFAULTS)
    unknown = sorted(set(options or {}) - set(opts))
    if unknown:
        raise ValueError(f"unknown evaluate option(s): {', '.join(unknown)}")
    opts.update(options or {})

    if opts["matrix"] is not None:
        if dets_path is not None or gts_path is not None:
            raise ValueError("pass either a detection tree or a matrix CSV, not both")
        csv_path = Path(opts["matrix"])
        matrix = EvalMatrix.from_csv(csv_path.read_text(encoding="utf-8"),
                                     source=str(csv_path))
    else:
        if dets_path is None or gts_path is None:
            raise ValueError("bind_evaluate needs dets_path and gts_path, "
                             "or options={'matrix': path}")
        matrix = evaluate_tree(
            dets_path,
            gts_path,
            iou=float(opts["iou"]),
            interp=str(opts["interp"]),
            merge_tiles=bool(opts["merge_tiles"]),
            nms_iou=float(opts["nms_iou"]),
        )

    out = summarize(matrix)
    out["severity_curve"] = [float(v) for v in out["severity_curve"]]
    out["ap_grid"] = {
        f"{kind}/{severity}": float(value)
        for (kind, severity), value in sorted(matrix.ap.items())
    }
    return out
