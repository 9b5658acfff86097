"""Static log-log SVG charts of regret against the horizon."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .regret import loglog_slope


def read_summary(path) -> tuple[list[str], dict[str, np.ndarray]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidArgument(f"{path}: empty file, no header")
    header, body = rows[0], [r for r in rows[1:] if r]
    if "T" not in header:
        raise InvalidArgument(f"{path}: header has no 'T' column: {header}")
    if len(body) == 0:
        raise InvalidArgument(f"{path}: 0 data rows")
    cols: dict[str, list] = {h: [] for h in header}
    for lineno, row in enumerate(body, 2):
        if len(row) != len(header):
            raise InvalidArgument(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
        for h, v in zip(header, row):
            cols[h].append(v)
    out = {}
    for h, vals in cols.items():
        try:
            out[h] = np.array(vals, dtype=float)
        except ValueError:
            out[h] = np.array(vals, dtype=object)
    return header, out


def metric_columns(header: list[str]) -> list[str]:
    return [h for h in header if h.startswith("mean_") and "queries" not in h]


def plot_summary(summary_path, out_dir=None) -> list[Path]:
    """Write one SVG per regret metric in the summary; returns the paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "nsbco"
    header, data = read_summary(summary_path)
    metrics = metric_columns(header)
    if not metrics:
        raise InvalidArgument(f"{summary_path}: no mean_* metric columns in {header}")
    summary_path = Path(summary_path)
    out_dir = summary_path.parent if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    T = data["T"].astype(float)
    written = []
    for m in metrics:
        y = data[m].astype(float)
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(T, y, "o-", label=m.removeprefix("mean_").replace("_", " "))
        if len(T) >= 2 and np.all(y > 0):
            slope = loglog_slope(T, y)
            b = np.mean(np.log(y) - slope * np.log(T))
            ax.loglog(T, np.exp(b) * T ** slope, "--", color="gray", label=f"fit: slope {slope:.3f}")
            ax.set_title(f"{m}  (slope {slope:.3f})")
        else:
            ax.set_title(m)
        ax.set_xlabel("T")
        ax.set_ylabel("mean regret")
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{summary_path.stem}_{m}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
