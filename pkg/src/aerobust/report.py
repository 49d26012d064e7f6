"""Report emission: evaluation summaries as JSON, aligned text tables,
long-format plot CSVs, and rendered figures.

Figures are written straight to PNG files (no display); the delimited
files next to them carry the same numbers for external tooling.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .metrics import EvalMatrix, mpc, severity_curve, summarize
from .schedule import CORRUPTION_CATEGORIES, CORRUPTION_KINDS, SEVERITIES

CURVE_IDENTITY_TOL = 1e-9


def render_report(matrix: EvalMatrix, meta: dict | None = None) -> dict:
    """JSON-ready evaluation summary; meta fields ride along under 'run'."""
    out = summarize(matrix)
    out["severity_curve"] = [float(v) for v in out["severity_curve"]]
    if meta:
        out["run"] = dict(meta)
    return out


def render_table(matrix: EvalMatrix) -> str:
    """Aligned plain-text view: per-kind AP, then the relative scores."""
    summary = summarize(matrix)
    width = max(len(k) for k in CORRUPTION_KINDS) + 2
    lines = ["per-corruption AP50 (severity-averaged)", ""]
    for kind in CORRUPTION_KINDS:
        lines.append(f"{kind:<{width}}{summary['per_kind'][kind]:>8.2f}")
    lines.append("")
    lines.append(f"{'mPC':<{width}}{summary['mPC']:>8.2f}")
    if "ap_clean" in summary:
        lines.append(f"{'clean AP50':<{width}}{summary['ap_clean']:>8.2f}")
        lines.append("")
        lines.append("relative scores")
        lines.append("")
        lines.append(f"{'rPC':<{width}}{summary['rPC']:>8.2f}")
        for category in CORRUPTION_CATEGORIES:
            lines.append(f"{'rPC_' + category:<{width}}{summary['rPC_' + category]:>8.2f}")
    if "ap_clouds" in summary:
        lines.append("")
        lines.append(f"{'clouds AP50':<{width}}{summary['ap_clouds']:>8.2f}")
        if "rPC_clouds" in summary:
            lines.append(f"{'rPC_clouds':<{width}}{summary['rPC_clouds']:>8.2f}")
    curve = " ".join(f"{v:.2f}" for v in summary["severity_curve"])
    lines.extend(["", f"{'severity curve':<{width}}{curve}", ""])
    return "\n".join(lines)


def write_eval_outputs(out_dir: str | Path, matrix: EvalMatrix, meta: dict | None = None) -> dict:
    """matrix.csv + report.json + report.txt under out_dir."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / "matrix.csv").write_text(matrix.to_csv(), encoding="utf-8")
    report = render_report(matrix, meta)
    (d / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    (d / "report.txt").write_text(render_table(matrix), encoding="utf-8")
    return report


def _curves_csv(matrices: dict[str, EvalMatrix]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "severity", "mean_ap"])
    footer = []
    for model, matrix in matrices.items():
        curve = severity_curve(matrix)
        for severity, value in zip(SEVERITIES, curve):
            writer.writerow([model, severity, repr(float(value))])
        curve_mean = float(np.mean(curve))
        mpc_value = mpc(matrix)
        if abs(curve_mean - mpc_value) > CURVE_IDENTITY_TOL:
            raise ConfigurationError(
                f"{model}: severity-curve mean {curve_mean!r} disagrees with mPC {mpc_value!r}"
            )
        footer.append(f"# {model}: curve_mean={curve_mean!r} mPC={mpc_value!r} identity=ok")
    return buf.getvalue() + "\n".join(footer) + "\n"


def _bars_csv(matrices: dict[str, EvalMatrix]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "category", "mean_ap", "rpc"])
    for model, matrix in matrices.items():
        for category, kinds in CORRUPTION_CATEGORIES.items():
            mean_ap = float(np.mean([matrix.kind_mean(kind) for kind in kinds]))
            if matrix.ap_clean:
                rpc_value = repr(100.0 * mean_ap / matrix.ap_clean)
            else:
                rpc_value = ""
            writer.writerow([model, category, repr(mean_ap), rpc_value])
    return buf.getvalue()


def _render_figures(out_dir: Path, matrices: dict[str, EvalMatrix]) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for model, matrix in matrices.items():
        ax.plot(SEVERITIES, severity_curve(matrix), marker="o", label=model)
    ax.set_xlabel("severity")
    ax.set_ylabel("mean AP50 over corruptions")
    ax.set_xticks(list(SEVERITIES))
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    curve_path = out_dir / "severity_curves.png"
    fig.savefig(curve_path, dpi=120)
    plt.close(fig)
    written.append(curve_path.name)

    categories = list(CORRUPTION_CATEGORIES)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = len(matrices)
    slot = 0.8 / max(n, 1)
    for m, (model, matrix) in enumerate(matrices.items()):
        values = [
            float(np.mean([matrix.kind_mean(kind) for kind in CORRUPTION_CATEGORIES[cat]]))
            for cat in categories
        ]
        positions = [i - 0.4 + slot * (m + 0.5) for i in range(len(categories))]
        ax.bar(positions, values, width=slot * 0.9, label=model)
    ax.set_xticks(range(len(categories)))
    ax.set_xticklabels(categories)
    ax.set_ylabel("mean AP50 per category")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    bars_path = out_dir / "category_bars.png"
    fig.savefig(bars_path, dpi=120)
    plt.close(fig)
    written.append(bars_path.name)
    return written


def write_report_outputs(out_dir: str | Path, matrices: dict[str, EvalMatrix]) -> dict:
    """Curve and category CSVs plus rendered PNG figures."""
    if not matrices:
        raise ConfigurationError("no matrices given to report on")
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / "severity_curves.csv").write_text(_curves_csv(matrices), encoding="utf-8")
    (d / "category_bars.csv").write_text(_bars_csv(matrices), encoding="utf-8")
    figures = _render_figures(d, matrices)
    return {
        "models": list(matrices),
        "files": ["severity_curves.csv", "category_bars.csv", *figures],
    }
