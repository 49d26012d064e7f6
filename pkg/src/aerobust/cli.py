"""Command line front end.

    aerobust corrupt   --in ds/ --out out/ [--kinds ...] [--severities ...]
    aerobust cloudify  --in ds/ --out out/ --pool pool.txt
    aerobust split     --in ds/ --out tiles/
    aerobust evaluate  --dets dets/ --gt labels/ --out eval/   (or --matrix m.csv)
    aerobust report    --matrix a.csv --matrix b.csv --out report/

Exit codes: 0 success, 1 finished with per-item failures, 2 bad
configuration or usage.  Every flag can come from a YAML --config file
keyed by the flag's long name (underscores for dashes); explicit flags
win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import __version__, dataset
from .clouds import DEFAULT_GAMMA, load_cloud_pool
from .errors import (
    ConfigurationError,
    DecodeError,
    EmptyCloudError,
    IncompleteMatrixError,
    ParameterError,
    ParseError,
)
from .evaluate import evaluate_tree
from .metrics import INTERP_MODES, EvalMatrix
from .report import write_eval_outputs, write_report_outputs
from .schedule import CORRUPTION_KINDS, SEVERITIES, default_schedule, load_schedule

_ERRORS = (
    ConfigurationError,
    DecodeError,
    EmptyCloudError,
    IncompleteMatrixError,
    ParameterError,
    ParseError,
)

_DEFAULTS = {
    "kinds": "all",
    "severities": "all",
    "seed": 0,
    "gamma": DEFAULT_GAMMA,
    "jobs": None,
    "schedule": None,
    "tile_size": 1024,
    "overlap": 200,
    "keep_fraction": 0.7,
    "interp": "voc07_11point",
    "iou": 0.5,
    "nms_iou": 0.1,
    "merge_tiles": False,
}


def parse_kinds(text: str) -> tuple[str, ...]:
    if text.strip().lower() == "all":
        return CORRUPTION_KINDS
    kinds = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [k for k in kinds if k not in CORRUPTION_KINDS]
    if bad or not kinds:
        raise ConfigurationError(
            f"unknown corruption kind(s) {', '.join(bad) or '(none given)'}; "
            f"valid kinds: {', '.join(CORRUPTION_KINDS)}"
        )
    return kinds


def parse_severities(text: str) -> tuple[int, ...]:
    raw = str(text).strip().lower()
    if raw == "all":
        return SEVERITIES
    out: list[int] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            try:
                lo, hi = (int(v) for v in part.split("-", 1))
            except ValueError as exc:
                raise ConfigurationError(f"bad severity range {part!r}") from exc
            out.extend(range(lo, hi + 1))
        else:
            try:
                out.append(int(part))
            except ValueError as exc:
                raise ConfigurationError(f"bad severity {part!r}") from exc
    bad = [s for s in out if s not in SEVERITIES]
    if bad or not out:
        raise ConfigurationError(f"severities must be within 1..5, got {text!r}")
    return tuple(dict.fromkeys(out))


def _merge_config(args: argparse.Namespace) -> dict:
    """Effective settings: defaults, then config file, then explicit flags."""
    settings = dict(_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            raw = yaml.safe_load(Path(config_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {config_path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{config_path}: invalid YAML: {exc}") from exc
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigurationError(f"{config_path}: config must be a mapping")
        unknown = [k for k in raw if k.replace("-", "_") not in settings]
        if unknown:
            raise ConfigurationError(f"{config_path}: unknown keys: {', '.join(unknown)}")
        for key, value in raw.items():
            settings[key.replace("-", "_")] = value
    for key in settings:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _write_job_report(out_root: Path, report: dict, settings: dict) -> None:
    report = dict(report)
    report["version"] = __version__
    report["config"] = {k: v for k, v in settings.items() if not callable(v)}
    out_root.mkdir(parents=True, exist_ok=True)
    path = out_root / "job_report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _finish(report: dict) -> int:
    failures = report.get("failures", [])
    for failure in failures:
        print(f"failed: {failure['item']}: {failure['error']}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_corrupt(args) -> int:
    settings = _merge_config(args)
    kinds = parse_kinds(settings["kinds"])
    severities = parse_severities(settings["severities"])
    sched = load_schedule(settings["schedule"]) if settings["schedule"] else default_schedule()
    report = dataset.corrupt_dataset(
        args.in_root,
        args.out_root,
        kinds=kinds,
        severities=severities,
        global_seed=int(settings["seed"]),
        schedule=sched,
        jobs=settings["jobs"],
    )
    _write_job_report(Path(args.out_root), report, settings)
    print(
        f"corrupt: {report['images_ok']} images x {len(kinds)} kinds x "
        f"{len(severities)} severities -> {report['outputs']} outputs, "
        f"{len(report['failures'])} failures"
    )
    return _finish(report)


def _cmd_cloudify(args) -> int:
    settings = _merge_config(args)
    pool = load_cloud_pool(args.pool, default_gamma=float(settings["gamma"]))
    report = dataset.cloudify_dataset(
        args.in_root,
        args.out_root,
        pool,
        global_seed=int(settings["seed"]),
        jobs=settings["jobs"],
    )
    _write_job_report(Path(args.out_root), report, settings)
    print(f"cloudify: {report['images_ok']} images, {len(report['failures'])} failures")
    return _finish(report)


def _cmd_split(args) -> int:
    settings = _merge_config(args)
    report = dataset.split_dataset(
        args.in_root,
        args.out_root,
        tile_size=int(settings["tile_size"]),
        overlap=int(settings["overlap"]),
        keep_fraction=float(settings["keep_fraction"]),
    )
    _write_job_report(Path(args.out_root), report, settings)
    print(f"split: {report['images']} images -> {report['tiles']} tiles")
    return _finish(report)


def _cmd_evaluate(args) -> int:
    settings = _merge_config(args)
    meta = {
        "version": __version__,
        "interp": settings["interp"],
        "iou": settings["iou"],
        "detections": "merged-tiles" if settings["merge_tiles"] else "as-given",
    }
    if args.matrix:
        if args.dets or args.gt:
            raise ConfigurationError(
                "evaluate takes either --matrix or --dets/--gt, not both"
            )
        matrix = EvalMatrix.from_csv(
            Path(args.matrix).read_text(encoding="utf-8"), source=str(args.matrix)
        )
        meta["source"] = str(args.matrix)
    else:
        if not (args.dets and args.gt):
            raise ConfigurationError("evaluate needs either --matrix or both --dets and --gt")
        matrix = evaluate_tree(
            args.dets,
            args.gt,
            iou=float(settings["iou"]),
            interp=settings["interp"],
            merge_tiles=bool(settings["merge_tiles"]),
            nms_iou=float(settings["nms_iou"]),
        )
        meta["source"] = f"dets={args.dets} gt={args.gt}"
    meta["config"] = {k: v for k, v in settings.items()}
    summary = write_eval_outputs(args.out_root, matrix, meta)
    print(f"evaluate: mPC={summary['mPC']:.2f}" + (
        f" rPC={summary['rPC']:.2f}" if "rPC" in summary else ""
    ))
    return 0


def _cmd_report(args) -> int:
    matrices: dict[str, EvalMatrix] = {}
    for item in args.matrix:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            name, path = Path(item).stem, item
        matrices[name] = EvalMatrix.from_csv(
            Path(path).read_text(encoding="utf-8"), source=path
        )
    result = write_report_outputs(args.out_root, matrices)
    print(f"report: wrote {', '.join(result['files'])} for {len(matrices)} model(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerobust",
        description="Corruption synthesis and rotated-box robustness evaluation "
                    "for aerial object detection datasets.",
    )
    parser.add_argument("--version", action="version", version=f"aerobust {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    corrupt = sub.add_parser("corrupt", help="corrupt a dataset at chosen kinds and severities")
    corrupt.add_argument("--in", dest="in_root", required=True, help="input dataset root")
    corrupt.add_argument("--out", dest="out_root", required=True, help="output root")
    corrupt.add_argument("--kinds", help="'all' or comma-separated corruption kinds")
    corrupt.add_argument("--severities", help="'all', '1-5', or comma-separated levels")
    corrupt.add_argument("--seed", type=int, help="global seed (default 0)")
    corrupt.add_argument("--schedule", help="severity schedule YAML (default: built in)")
    corrupt.add_argument("--jobs", type=int, help="worker threads")
    corrupt.add_argument("--config", help="YAML config file")
    corrupt.set_defaults(func=_cmd_corrupt)

    cloudify = sub.add_parser("cloudify", help="composite real clouds onto a dataset")
    cloudify.add_argument("--in", dest="in_root", required=True)
    cloudify.add_argument("--out", dest="out_root", required=True)
    cloudify.add_argument("--pool", required=True, help="cloud pool manifest: 'path [gamma]' lines")
    cloudify.add_argument("--gamma", type=float, help="default extraction threshold (128)")
    cloudify.add_argument("--seed", type=int)
    cloudify.add_argument("--jobs", type=int)
    cloudify.add_argument("--config", help="YAML config file")
    cloudify.set_defaults(func=_cmd_cloudify)

    split = sub.add_parser("split", help="tile images and annotations")
    split.add_argument("--in", dest="in_root", required=True)
    split.add_argument("--out", dest="out_root", required=True)
    split.add_argument("--tile-size", dest="tile_size", type=int)
    split.add_argument("--overlap", type=int)
    split.add_argument("--keep-fraction", dest="keep_fraction", type=float)
    split.add_argument("--config", help="YAML config file")
    split.set_defaults(func=_cmd_split)

    evaluate = sub.add_parser("evaluate", help="AP grid and robustness summary")
    evaluate.add_argument("--dets", help="detections root (clean/, <kind>/<sev>/, clouds/)")
    evaluate.add_argument("--gt", help="ground-truth labelTxt directory or dataset root")
    evaluate.add_argument("--matrix", help="precomputed AP matrix CSV instead of --dets/--gt")
    evaluate.add_argument("--out", dest="out_root", required=True)
    evaluate.add_argument("--interp", choices=INTERP_MODES)
    evaluate.add_argument("--iou", type=float, help="match threshold (0.5)")
    evaluate.add_argument("--merge-tiles", dest="merge_tiles", action="store_const", const=True,
                          help="merge tile-named detections before scoring")
    evaluate.add_argument("--nms-iou", dest="nms_iou", type=float, help="merge NMS threshold (0.1)")
    evaluate.add_argument("--config", help="YAML config file")
    evaluate.set_defaults(func=_cmd_evaluate)

    rep = sub.add_parser("report", help="curves, bars, and figures from matrices")
    rep.add_argument("--matrix", action="append", required=True,
                     help="matrix CSV, optionally 'name=path'; repeatable")
    rep.add_argument("--out", dest="out_root", required=True)
    rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
