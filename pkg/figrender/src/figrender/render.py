"""Render sweep CSVs as line plots or zero-centered heatmaps.

Output is a pure function of the CSV bytes and the plot spec: the style is
pinned (fixed hash salt, no timestamps in metadata), so repeated runs produce
byte-identical SVG/PNG files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class PlotSpec:
    csv_path: str
    kind: str  # "lines" | "heatmap"
    out_path: str
    columns: tuple[str, ...] = ()
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    figsize: tuple[float, float] = (6.0, 4.0)
    dpi: int = 150
    cmap: str = "RdBu_r"

    def __post_init__(self):
        if self.kind not in ("lines", "heatmap"):
            raise RenderError(f"kind must be 'lines' or 'heatmap', got {self.kind!r}")


def load_table(path) -> tuple[list[str], dict[str, np.ndarray]]:
    """Read a CSV into float columns; 'nan' cells become NaN."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    if not rows or not rows[0]:
        raise RenderError(f"{path} is empty")
    header = rows[0]
    body = rows[1:]
    if not body:
        raise RenderError(f"{path} has a header but no data rows")
    table = {}
    for j, name in enumerate(header):
        column = []
        for row in body:
            try:
                column.append(float(row[j]))
            except (IndexError, ValueError) as exc:
                raise RenderError(f"column {name!r} has a non-numeric cell: {exc}") from exc
        table[name] = np.array(column)
    return header, table


def _resolve_columns(spec: PlotSpec, header: list[str]) -> list[str]:
    columns = list(spec.columns) if spec.columns else list(header)
    missing = [c for c in columns if c not in header]
    if missing:
        raise RenderError(f"missing columns {missing}; CSV has {header}")
    need = 2 if spec.kind == "lines" else 3
    if len(columns) < need:
        raise RenderError(f"{spec.kind} plots need at least {need} columns, got {columns}")
    return columns


def _pin_style():
    plt.rcdefaults()
    plt.rcParams.update(
        {
            "svg.hashsalt": "figrender",
            "figure.max_open_warning": 0,
            "font.family": "DejaVu Sans",
            "axes.grid": True,
            "grid.alpha": 0.3,
        }
    )


def _save(fig, spec: PlotSpec) -> None:
    out = str(spec.out_path)
    if out.endswith(".svg"):
        fig.savefig(out, format="svg", metadata={"Date": None})
    elif out.endswith(".png"):
        fig.savefig(out, format="png", metadata={"Software": "figrender"})
    else:
        raise RenderError(f"output must end in .svg or .png, got {out}")
    plt.close(fig)


def _render_lines(spec: PlotSpec, columns: list[str], table: dict[str, np.ndarray]) -> None:
    x_name, series = columns[0], columns[1:]
    fig, ax = plt.subplots(figsize=spec.figsize, dpi=spec.dpi)
    x = table[x_name]
    for name in series:
        y = np.ma.masked_invalid(table[name])
        ax.plot(x, y, label=name, linewidth=1.4)
    ax.set_xlabel(spec.xlabel or x_name)
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="best", fontsize=8)
    _save(fig, spec)


def _render_heatmap(spec: PlotSpec, columns: list[str], table: dict[str, np.ndarray]) -> None:
    x_name, y_name, v_name = columns[0], columns[1], columns[2]
    xs = np.unique(table[x_name])
    ys = np.unique(table[y_name])
    grid = np.full((ys.size, xs.size), np.nan)
    x_pos = {v: i for i, v in enumerate(xs)}
    y_pos = {v: i for i, v in enumerate(ys)}
    for x, y, v in zip(table[x_name], table[y_name], table[v_name]):
        grid[y_pos[y], x_pos[x]] = v
    masked = np.ma.masked_invalid(grid)
    # Zero-centered symmetric scale keeps the sign structure legible.
    span = float(np.abs(masked).max()) if masked.count() else 1.0
    span = span if span > 0 else 1.0
    fig, ax = plt.subplots(figsize=spec.figsize, dpi=spec.dpi)
    cmap = plt.get_cmap(spec.cmap).copy()
    cmap.set_bad(color="#bbbbbb")
    image = ax.imshow(
        masked,
        origin="lower",
        aspect="auto",
        cmap=cmap,
        vmin=-span,
        vmax=span,
        extent=(xs.min(), xs.max(), ys.min(), ys.max()),
        interpolation="nearest",
    )
    fig.colorbar(image, ax=ax, label=v_name)
    ax.set_xlabel(spec.xlabel or x_name)
    ax.set_ylabel(spec.ylabel or y_name)
    ax.grid(False)
    if spec.title:
        ax.set_title(spec.title)
    _save(fig, spec)


def render(spec: PlotSpec) -> str:
    """Render the spec'd figure; returns the output path."""
    header, table = load_table(spec.csv_path)
    columns = _resolve_columns(spec, header)
    _pin_style()
    if spec.kind == "lines":
        _render_lines(spec, columns, table)
    else:
        _render_heatmap(spec, columns, table)
    return str(spec.out_path)
