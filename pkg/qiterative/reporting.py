"""CSV, summary-table and plot output for experiment results."""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .models import ExperimentResult, Table

logger = logging.getLogger(__name__)


def format_value(value: object) -> str:
    """Shortest round-trip text for floats; ``str`` for everything else."""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (np.integer,)):
        return str(int(value))
    if isinstance(value, (np.bool_,)):
        return str(bool(value))
    return str(value)


def write_csv(path: Path, table: Table) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path: Path) -> Tuple[List[str], List[List[str]]]:
    with Path(path).open(encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


def summary_rows(summary: Dict[str, object]) -> List[Tuple[str, str]]:
    rows = []
    for key, value in summary.items():
        if isinstance(value, float) and math.isfinite(value):
            rows.append((key, f"{value:.6g}"))
        else:
            rows.append((key, format_value(value)))
    return rows


def render_table(rows: Sequence[Tuple[str, str]], title: str = "Quantity") -> str:
    key_width = max([len(title)] + [len(key) for key, _ in rows])
    header = f"{title.ljust(key_width)} | Value"
    divider = f"{'-' * key_width}-|-{'-' * 20}"
    lines = [header, divider]
    for key, value in rows:
        lines.append(f"{key.ljust(key_width)} | {value}")
    return "\n".join(lines)


def format_report(result: ExperimentResult) -> str:
    lines = [f"{result.name} report", "-" * (len(result.name) + 7), render_table(summary_rows(result.summary))]
    if result.tables:
        lines.append("")
        lines.append("Tables: " + ", ".join(f"{name} ({len(t.rows)} rows)" for name, t in sorted(result.tables.items())))
    return "\n".join(lines)


def write_result(result: ExperimentResult, out_dir: Path, plots: bool = False) -> List[Path]:
    """Write one CSV per table plus ``summary.csv``; optionally render plots."""
    target = Path(out_dir) / result.name
    written = []
    for name, table in sorted(result.tables.items()):
        written.append(write_csv(target / f"{name}.csv", table))
    summary = Table(["key", "value"], [[k, v] for k, v in result.summary.items()])
    written.append(write_csv(target / "summary.csv", summary))
    if plots:
        written.extend(render_plots(result, target))
    logger.info("Wrote %d artifact(s) to %s", len(written), target)
    return written


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "qiterative"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> Path:
    # No timestamp in the SVG header.
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def plot_error_traces(curves: Dict[str, np.ndarray], path: Path, ylabel: str = "error") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in curves.items():
        values = np.asarray(values, dtype=float)
        ax.semilogy(np.arange(values.size), np.maximum(values, 1e-300), label=label)
    ax.set_xlabel("k")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    try:
        return _save(fig, path)
    finally:
        plt.close(fig)


def plot_field(field: np.ndarray, x: np.ndarray, y: np.ndarray, path: Path, xlabel: str, ylabel: str) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 5))
    contour = ax.contourf(x, y, field, levels=40, cmap="RdBu_r")
    fig.colorbar(contour, ax=ax)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    try:
        return _save(fig, path)
    finally:
        plt.close(fig)


def heatmap_png(field: np.ndarray, path: Path, scale: int = 4) -> Path:
    """Diverging blue/white/red raster of ``field`` (row 0 drawn at the bottom)."""
    from PIL import Image

    field = np.asarray(field, dtype=float)
    peak = float(np.abs(field).max()) or 1.0
    t = np.clip(field / peak, -1.0, 1.0)[::-1]
    red = np.where(t > 0, 1.0, 1.0 + t)
    blue = np.where(t < 0, 1.0, 1.0 - t)
    green = 1.0 - np.abs(t)
    rgb = (np.stack([red, green, blue], axis=-1) * 255).round().astype(np.uint8)
    image = Image.fromarray(rgb)
    if scale > 1:
        image = image.resize((image.width * scale, image.height * scale), Image.Resampling.NEAREST)
    path.parent.mkdir(parents=True, exist_ok=True)
    image.save(path, format="PNG")
    return path


def render_plots(result: ExperimentResult, target: Path) -> List[Path]:
    target.mkdir(parents=True, exist_ok=True)
    arrays = result.arrays
    written: List[Path] = []
    if result.name == "burgers_shock":
        written.append(
            plot_error_traces(
                {"fidelity": arrays["fidelity"], "euclidean": arrays["euclidean"]}, target / "errors.svg"
            )
        )
    elif result.name == "burgers_surface":
        written.append(plot_field(arrays["surface"], arrays["x"], arrays["t"], target / "surface.svg", "x", "t"))
    elif result.name == "euler":
        written.append(plot_field(arrays["pressure"], arrays["x"], arrays["y"], target / "pressure.svg", "x", "y"))
        written.append(heatmap_png(arrays["pressure"], target / "pressure.png"))
    elif result.name == "woodbury":
        written.append(plot_error_traces(dict(arrays), target / "woodbury.svg", "euclidean error"))
    elif result.name == "kappa":
        written.append(_plot_kappa(result.tables["kappa"], result.summary, target / "kappa.svg"))
    return written


def _plot_kappa(table: Table, summary: Dict[str, object], path: Path) -> Path:
    plt = _pyplot()
    kappa = np.array([row[0] for row in table.rows], dtype=float)
    count = np.array([row[1] for row in table.rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(kappa, count, "o", label="iterations")
    if kappa.size >= 2:
        ax.plot(kappa, summary["slope"] * kappa + summary["intercept"], "-", label=f"fit r={summary['pearson_r']:.4f}")
    ax.set_xlabel("condition number")
    ax.set_ylabel("iterations to threshold")
    ax.legend()
    fig.tight_layout()
    try:
        return _save(fig, path)
    finally:
        plt.close(fig)
