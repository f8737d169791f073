"""JSON run reports, comparison tables and box-plot data (CSV + SVG)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import ParseError
from .stats import box_summary

REQUIRED_KEYS = ("task", "classes", "folds", "mean", "ci95", "seed", "config", "timings")


def report_dict(report, task, classes, config):
    """Serialisable run report. ``timings`` holds only deterministic counters."""
    folds = [{"accuracy": f.accuracy, "confusion": np.asarray(f.confusion).tolist(),
              "test_size": f.test_size, "epochs_run": len(f.history)} for f in report.folds]
    return {
        "task": task,
        "classes": int(classes),
        "mode": report.mode,
        "folds": folds,
        "mean": report.mean,
        "ci95": report.ci_half_width,
        "ci_method": report.ci_method,
        "seed": report.seed,
        "config": config,
        "timings": {"epochs_run": sum(f["epochs_run"] for f in folds),
                    "folds": len(folds)},
    }


def write_report(path, data):
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def read_report(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno) from exc
    except OSError as exc:
        raise ParseError(f"cannot read report: {exc.strerror}", path=path) from exc
    if not isinstance(data, dict):
        raise ParseError("report must be a JSON object", path=path)
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ParseError(f"report lacks {', '.join(missing)}", path=path)
    folds = data["folds"]
    if not isinstance(folds, list) or not folds or not all(
            isinstance(f, dict) and isinstance(f.get("accuracy"), (int, float)) for f in folds):
        raise ParseError("folds must be a non-empty list of {accuracy, confusion}", path=path)
    return data


def format_cell(mean, half_width):
    """Percent with two decimals: ``94.00 ± 3.93``; the CI is omitted when absent."""
    if half_width is None:
        return f"{100 * mean:.2f}"
    return f"{100 * mean:.2f} ± {100 * half_width:.2f}"


def comparison_table(reports, names):
    rows = [(name, format_cell(r["mean"], r["ci95"]), r["task"], len(r["folds"]))
            for name, r in zip(names, reports)]
    header = ("run", "accuracy (%)", "task", "folds")
    widths = [max(len(str(row[i])) for row in rows + [header]) for i in range(4)]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def box_rows(reports, names):
    out = []
    for name, r in zip(names, reports):
        accs = [f["accuracy"] for f in r["folds"]]
        s = box_summary(accs)
        out.append({"run": name, "folds": " ".join(repr(a) for a in accs), **{
            k: s[k] for k in ("min", "q1", "median", "q3", "max", "whisker_low",
                              "whisker_high")},
            "outliers": " ".join(repr(v) for v in s["outliers"])})
    return out


def write_box_csv(path, rows):
    path = Path(path)
    fields = ["run", "folds", "min", "q1", "median", "q3", "max", "whisker_low",
              "whisker_high", "outliers"]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return path


def _esc(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def render_box_svg(rows, title="Fold accuracy", width=480, height=320):
    """Self-contained SVG box plot: one box per run, y axis in percent."""
    left, right, top, bottom = 56, 16, 32, 48
    values = []
    for row in rows:
        values += [row["whisker_low"], row["whisker_high"], row["min"], row["max"]]
    lo, hi = 100 * min(values), 100 * max(values)
    pad = max((hi - lo) * 0.1, 0.5)
    lo, hi = max(lo - pad, 0.0), min(hi + pad, 100.0)
    if hi <= lo:
        hi = lo + 1.0
    plot_h = height - top - bottom
    slot = (width - left - right) / max(len(rows), 1)

    def y(v):
        return top + plot_h * (1.0 - (100 * v - lo) / (hi - lo))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">'
             f'{_esc(title)}</text>',
             f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>']
    for t in np.linspace(lo, hi, 5):
        ty = top + plot_h * (1.0 - (t - lo) / (hi - lo))
        parts.append(f'<line x1="{left - 4}" y1="{ty:.1f}" x2="{left}" y2="{ty:.1f}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{left - 6}" y="{ty + 4:.1f}" text-anchor="end">{t:.1f}</text>')
    parts.append(f'<text x="14" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {top + plot_h / 2:.1f})">accuracy (%)</text>')
    for i, row in enumerate(rows):
        cx = left + slot * (i + 0.5)
        half = min(slot * 0.3, 40)
        q1, med, q3 = y(row["q1"]), y(row["median"]), y(row["q3"])
        wl, wh = y(row["whisker_low"]), y(row["whisker_high"])
        parts += [
            f'<line x1="{cx:.1f}" y1="{wh:.1f}" x2="{cx:.1f}" y2="{q3:.1f}" stroke="black"/>',
            f'<line x1="{cx:.1f}" y1="{q1:.1f}" x2="{cx:.1f}" y2="{wl:.1f}" stroke="black"/>',
            f'<line x1="{cx - half / 2:.1f}" y1="{wh:.1f}" x2="{cx + half / 2:.1f}" '
            f'y2="{wh:.1f}" stroke="black"/>',
            f'<line x1="{cx - half / 2:.1f}" y1="{wl:.1f}" x2="{cx + half / 2:.1f}" '
            f'y2="{wl:.1f}" stroke="black"/>',
            f'<rect x="{cx - half:.1f}" y="{q3:.1f}" width="{2 * half:.1f}" '
            f'height="{max(q1 - q3, 0.0):.1f}" fill="#cfe0f3" stroke="black"/>',
            f'<line x1="{cx - half:.1f}" y1="{med:.1f}" x2="{cx + half:.1f}" y2="{med:.1f}" '
            f'stroke="#c0392b" stroke-width="2"/>',
            f'<text x="{cx:.1f}" y="{top + plot_h + 16}" text-anchor="middle">'
            f'{_esc(row["run"])}</text>',
        ]
        for v in (row["outliers"].split() if isinstance(row["outliers"], str)
                  else row["outliers"]):
            parts.append(f'<circle cx="{cx:.1f}" cy="{y(float(v)):.1f}" r="2.5" fill="none" '
                         f'stroke="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
