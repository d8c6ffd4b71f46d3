"""Summary tables and deterministic SVG plots from run directories."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "hwcodesign"
SVG_METADATA = {"Date": None, "Creator": None}
CODESIGN_COMMANDS = {"codesign", "baseline-hwnas", "baseline-seq", "baseline-dshwnas"}


class ReportError(ValueError):
    pass


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def load_runs(dirs) -> tuple[list[dict], list[np.ndarray]]:
    """Codesign rows and grad-interp heatmaps found in ``dirs``."""
    if not dirs:
        raise ReportError("report needs at least one run directory")
    rows, heatmaps = [], []
    for d in dirs:
        d = Path(d)
        manifest = d / "manifest.json"
        if not manifest.exists():
            raise ReportError(f"{d} is not a completed run (no manifest.json)")
        command = json.loads(manifest.read_text())["subcommand"]
        if command in CODESIGN_COMMANDS:
            rows.extend(read_csv(d / "results.csv"))
        elif command == "study-grad-interp":
            heatmaps.append(np.loadtxt(d / "heatmap.csv", delimiter=",", skiprows=1, ndmin=2))
    return rows, heatmaps


def ordering_table(rows: list[dict]) -> list[list[str]]:
    """Per seed: latency of rhnas, sequential, hwnas and whether they are ordered."""
    by_seed: dict[str, dict[str, float]] = {}
    for r in rows:
        if r["method"] in ("rhnas", "sequential", "hwnas") and r["latency_s"]:
            by_seed.setdefault(r["seed"], {})[r["method"]] = float(r["latency_s"])
    out = []
    for seed in sorted(by_seed, key=int):
        lat = by_seed[seed]
        if len(lat) < 3:
            continue
        ordered = lat["rhnas"] <= lat["sequential"] <= lat["hwnas"]
        out.append([seed, repr(lat["rhnas"]), repr(lat["sequential"]), repr(lat["hwnas"]), str(int(ordered))])
    return out


def scatter_svg(rows: list[dict], path) -> list[str]:
    """Latency vs task loss, one point per (method, seed). Returns legend labels."""
    fig, ax = plt.subplots(figsize=(5, 4))
    methods = []
    for r in rows:
        if r["method"] not in methods:
            methods.append(r["method"])
    for m in methods:
        pts = [(float(r["task_loss"]), float(r["latency_s"]) * 1e3) for r in rows
               if r["method"] == m and r["latency_s"]]
        if pts:
            x, y = zip(*pts)
            ax.scatter(x, y, label=m)
        else:
            ax.scatter([], [], label=m)
    ax.set_xlabel("task loss")
    ax.set_ylabel("latency (ms)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return methods


def heatmap_svg(grid: np.ndarray, path, phis=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    extent = None
    if phis is not None:
        extent = (-0.5, grid.shape[1] - 0.5, phis[-1], phis[0])
    im = ax.imshow(grid, aspect="auto", cmap="viridis", extent=extent)
    ax.set_xlabel("HW one-hot index j")
    ax.set_ylabel("phi")
    fig.colorbar(im, ax=ax, label="|gradient|")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
