"""Figures from the simulation CLI's CSV/JSON artifacts.

Everything here reads the documented file contracts and nothing else:
no imports from the simulation package, so batch studies can render
their results on a machine that only has the output files.

Four figure kinds:

- ``overlay``: one column against x from several CSVs, one labeled
  curve per file (detection-density overlays and the like).
- ``loglog``: error against parameter from a sweep CSV on log-log
  axes, annotated with the fitted slope taken from the sibling report
  JSON.
- ``curve``: one or more columns against x from a single CSV.
- ``scatter``: points from a single CSV.

Column references are header names, optionally prefixed with ``-`` to
negate the values (the spectrum files tabulate the decay rate ``mu``;
``-mu`` plots the energy's imaginary part). Requesting a column that
is not in the header is an error, never a silent drop. Rows where a
requested field is empty are skipped; if nothing remains the input is
rejected as empty.

Rendering is pinned (fixed style, fixed raster dpi, salted SVG ids,
no embedded dates) so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

__all__ = ["FigureRecipe", "plot"]

_KINDS = ("overlay", "loglog", "curve", "scatter")
_FORMATS = ("png", "svg")

_STYLE = {
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "detectlab-plots",
    "svg.fonttype": "none",
}


@dataclass(frozen=True)
class FigureRecipe:
    """Declarative description of one figure.

    inputs: CSV paths; the loglog kind takes (sweep csv, report json).
    y: column names; overlay draws the single y column from every
    input, curve draws every y column from the single input, scatter
    takes exactly one.
    """

    kind: str
    inputs: tuple[str, ...]
    output: str
    x: str
    y: tuple[str, ...]
    labels: tuple[str, ...] = ()
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {_KINDS}")
        if not self.inputs:
            raise ValueError("recipe needs at least one input file")
        fmt = Path(self.output).suffix.lstrip(".").lower()
        if fmt not in _FORMATS:
            raise ValueError(f"output must end in .png or .svg, got {self.output!r}")
        if not self.y:
            raise ValueError("recipe names no y columns")
        if self.labels and len(self.labels) != self._n_curves():
            raise ValueError(
                f"got {len(self.labels)} labels for {self._n_curves()} curves"
            )

    def _n_curves(self) -> int:
        return len(self.inputs) if self.kind == "overlay" else len(self.y)


def _read_columns(path: str, names: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Requested columns from one CSV, strict about the header."""
    if not Path(path).is_file():
        raise FileNotFoundError(f"input file {path} does not exist")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path} has no header row") from None
        bare = [n.lstrip("-") for n in names]
        missing = sorted(set(bare) - set(header))
        if missing:
            raise ValueError(
                f"{path} has no column(s) {missing}; header is {header}"
            )
        idx = [header.index(b) for b in bare]
        rows = [r for r in reader if all(r[i] != "" for i in idx)]
    if not rows:
        raise ValueError(f"{path} has no usable rows for columns {list(names)}")
    out = {}
    for name, i in zip(names, idx):
        values = np.array([float(r[i]) for r in rows])
        out[name] = -values if name.startswith("-") else values
    return out


def _load_slope(path: str) -> float | None:
    with open(path) as fh:
        report = json.load(fh)
    slope = report.get("slope")
    return None if slope is None else float(slope)


def plot(recipe: FigureRecipe) -> dict:
    """Render the recipe and return figure metadata.

    The metadata dict carries the output path and format, the curve
    count, the plotted data ranges, and for the loglog kind the
    annotated slope (None when the report has none).
    """
    fmt = Path(recipe.output).suffix.lstrip(".").lower()
    slope = None
    with matplotlib.rc_context(_STYLE):
        fig = Figure(figsize=(4.8, 3.2), constrained_layout=True)
        ax = fig.add_subplot()
        xs, ys = [], []

        if recipe.kind == "overlay":
            labels = recipe.labels or tuple(Path(p).stem for p in recipe.inputs)
            (y_col,) = recipe.y
            for path, label in zip(recipe.inputs, labels):
                data = _read_columns(path, (recipe.x, y_col))
                ax.plot(data[recipe.x], data[y_col], label=label)
                xs.append(data[recipe.x])
                ys.append(data[y_col])
            ax.legend()
        elif recipe.kind == "loglog":
            if len(recipe.inputs) != 2:
                raise ValueError("loglog takes exactly (sweep csv, report json)")
            data = _read_columns(recipe.inputs[0], (recipe.x, *recipe.y))
            slope = _load_slope(recipe.inputs[1])
            labels = recipe.labels or recipe.y
            for y_col, label in zip(recipe.y, labels):
                ax.loglog(data[recipe.x], data[y_col], marker="o", label=label)
                xs.append(data[recipe.x])
                ys.append(data[y_col])
            if slope is not None:
                ax.annotate(
                    f"slope = {slope:.4f}",
                    xy=(0.05, 0.08),
                    xycoords="axes fraction",
                )
            ax.legend()
        elif recipe.kind == "curve":
            if len(recipe.inputs) != 1:
                raise ValueError("curve takes exactly one input csv")
            data = _read_columns(recipe.inputs[0], (recipe.x, *recipe.y))
            labels = recipe.labels or recipe.y
            for y_col, label in zip(recipe.y, labels):
                ax.plot(data[recipe.x], data[y_col], label=label)
                xs.append(data[recipe.x])
                ys.append(data[y_col])
            if len(recipe.y) > 1:
                ax.legend()
        else:
            if len(recipe.inputs) != 1 or len(recipe.y) != 1:
                raise ValueError("scatter takes one input csv and one y column")
            data = _read_columns(recipe.inputs[0], (recipe.x, recipe.y[0]))
            ax.scatter(data[recipe.x], data[recipe.y[0]], s=14)
            xs.append(data[recipe.x])
            ys.append(data[recipe.y[0]])

        ax.set_title(recipe.title)
        ax.set_xlabel(recipe.xlabel or recipe.x)
        ax.set_ylabel(recipe.ylabel or ", ".join(recipe.y))

        metadata = {"Date": None} if fmt == "svg" else {"Software": "detectlab-plots"}
        fig.savefig(recipe.output, format=fmt, metadata=metadata)

    x_all = np.concatenate(xs)
    y_all = np.concatenate(ys)
    return {
        "output": recipe.output,
        "format": fmt,
        "n_curves": recipe._n_curves(),
        "x_min": float(x_all.min()),
        "x_max": float(x_all.max()),
        "y_min": float(y_all.min()),
        "y_max": float(y_all.max()),
        "slope": slope,
    }
