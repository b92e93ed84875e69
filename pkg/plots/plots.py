#!/usr/bin/env python3
"""Render iteration CSVs from the structuring pipeline as figures.

Three kinds, matched to the pipeline's two CSV schemas:

  whisker      per-iteration box plots of the unstructured norm, from a
               summary CSV (iter,min,q1,median,q3,max,count)
  convergence  unstructured-norm curves per trial, from a history CSV
               (trial,iter,norm_Eu,...)
  norms        structured norm and transformation 2-norms per iteration,
               from a history CSV

Usage:
  plots.py --kind {whisker|convergence|norms} --in data.csv --out plot.png [--log-y]

Output is deterministic: no timestamps or software tags are embedded, so
identical CSVs give byte-identical images.
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

REQUIRED_COLUMNS = {
    "whisker": ("iter", "min", "q1", "median", "q3", "max"),
    "convergence": ("trial", "iter", "norm_Eu"),
    "norms": ("trial", "iter", "norm_Es", "normU2", "normV2"),
}

SAVE_OPTS = {"dpi": 110, "metadata": {"Software": None}}


class ColumnError(Exception):
    pass


def read_rows(path: Path, kind: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise ColumnError(
                f"{path}: kind '{kind}' needs columns {missing}, file has {header}"
            )
        return list(reader)


def fvals(rows, column):
    return [float(r[column]) for r in rows]


def render_whisker(rows, ax, log_y):
    stats = [
        {
            "med": float(r["median"]),
            "q1": float(r["q1"]),
            "q3": float(r["q3"]),
            "whislo": float(r["min"]),
            "whishi": float(r["max"]),
            "label": r["iter"],
        }
        for r in rows
    ]
    ax.bxp(stats, showfliers=False)
    ax.set_xlabel("# iterations")
    ax.set_ylabel(r"$\Vert E^u \Vert$")
    if log_y:
        ax.set_yscale("log")
    # trials that stop early keep contributing their final value to later boxes
    ax.set_title("unstructured norm per iteration (early finishers carried forward)", fontsize=9)


def render_convergence(rows, ax, log_y):
    by_trial = defaultdict(list)
    for r in rows:
        by_trial[r["trial"]].append((int(r["iter"]), float(r["norm_Eu"])))
    for trial, points in sorted(by_trial.items()):
        points.sort()
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        if log_y:
            xs = [x for x, y in zip(xs, ys) if y > 0]
            ys = [y for y in ys if y > 0]
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1, label=f"trial {trial}")
    ax.set_xlabel("# iterations")
    ax.set_ylabel(r"$\Vert E^u \Vert$")
    if log_y:
        ax.set_yscale("log")
    if len(by_trial) <= 8:
        ax.legend(fontsize=7)


def render_norms(rows, fig, log_y):
    by_trial = defaultdict(list)
    for r in rows:
        by_trial[r["trial"]].append(
            (int(r["iter"]), float(r["norm_Es"]), float(r["normU2"]), float(r["normV2"]))
        )
    ax_es, ax_uv = fig.subplots(1, 2)
    for trial, points in sorted(by_trial.items()):
        points.sort()
        xs = [p[0] for p in points]
        ax_es.plot(xs, [p[1] for p in points], marker="o", markersize=3, linewidth=1)
        ax_uv.plot(xs, [p[2] for p in points], marker="o", markersize=3, linewidth=1, label=r"$\Vert U \Vert_2$")
        ax_uv.plot(xs, [p[3] for p in points], marker="s", markersize=3, linewidth=1, label=r"$\Vert V \Vert_2$")
    ax_es.set_xlabel("# iterations")
    ax_es.set_ylabel(r"$\Vert E^s \Vert$")
    ax_uv.set_xlabel("# iterations")
    ax_uv.set_ylabel("transformation 2-norm")
    ax_uv.axhline(1.0, color="gray", linewidth=0.6, linestyle=":")
    if log_y:
        ax_es.set_yscale("log")
    handles, labels = ax_uv.get_legend_handles_labels()
    if labels:
        ax_uv.legend(handles[:2], labels[:2], fontsize=8)


def render(kind: str, in_path: Path, out_path: Path, log_y: bool = False) -> Path:
    rows = read_rows(in_path, kind)
    if not rows:
        raise ColumnError(f"{in_path}: no data rows")
    fig = plt.figure(figsize=(7.5, 3.2) if kind == "norms" else (5.0, 3.4))
    if kind == "norms":
        render_norms(rows, fig, log_y)
    else:
        ax = fig.subplots()
        if kind == "whisker":
            render_whisker(rows, ax, log_y)
        else:
            render_convergence(rows, ax, log_y)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, **SAVE_OPTS)
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--kind", required=True, choices=sorted(REQUIRED_COLUMNS))
    parser.add_argument("--in", dest="in_path", required=True, type=Path, metavar="CSV")
    parser.add_argument("--out", dest="out_path", required=True, type=Path, metavar="PNG")
    parser.add_argument("--log-y", action="store_true")
    args = parser.parse_args(argv)
    try:
        render(args.kind, args.in_path, args.out_path, args.log_y)
    except (ColumnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
