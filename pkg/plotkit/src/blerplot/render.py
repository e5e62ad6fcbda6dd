"""Semilog BLER-versus-E_b/N_0 figures from result CSV files.

Input files follow the simulator's delimited schema
(``scheme,dict_kind,N,L,K,M,algo,T,ebn0_db,trials,block_errors,bler,ci_low,
ci_high,seed[,user],wall_time`` with ``#`` comment lines); rows are grouped
into one curve per distinct combination of the requested group-by columns and
drawn with Wilson-interval error bars on a log BLER axis.  Published
operating points can be overlaid as unconnected markers from a reference
JSON file.

Rendering is a pure function of the inputs: a fixed style, fixed figure
geometry and pinned PNG metadata make repeated runs byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = ("scheme", "dict_kind", "N", "L", "K", "M", "algo", "T",
                    "ebn0_db", "trials", "block_errors", "bler", "ci_low",
                    "ci_high", "seed")
_INT_COLUMNS = {"N", "L", "K", "M", "T", "trials", "block_errors", "seed"}
_FLOAT_COLUMNS = {"ebn0_db", "bler", "ci_low", "ci_high", "wall_time"}

_STYLE = {
    "figure.figsize": (7.0, 5.0),
    "figure.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.4,
    "legend.fontsize": 8.5,
    "svg.hashsalt": "blerplot",
}

_MARKERS = ("o", "s", "^", "v", "D", "P", "X", "*", "<", ">", "h", "p")
_REF_MARKERS = ("*", "d", "x", "+")


class PlotError(ValueError):
    """Bad CSV schema, empty selection, or malformed reference file."""


@dataclass
class PlotSpec:
    """What to draw: inputs, grouping, optional references, output path."""

    csv_paths: list
    out_path: str
    group_by: tuple = ("algo", "K")
    ref_path: str | None = None
    title: str = ""
    xlabel: str = "$E_b/N_0$ (dB)"
    ylabel: str = "BLER"
    filters: dict = field(default_factory=dict)


def load_rows(paths) -> list:
    """Parse result CSVs into row dicts, validating the schema."""
    rows = []
    for path in paths:
        with open(path) as fh:
            header = None
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if header is None or line.startswith("scheme,"):
                    candidate = line.split(",")
                    if candidate[: len(REQUIRED_COLUMNS)] == list(REQUIRED_COLUMNS):
                        header = candidate
                        continue
                    if header is None:
                        raise PlotError(f"{path}: header does not match the result schema")
                values = line.split(",")
                if len(values) != len(header):
                    raise PlotError(f"{path}: row width {len(values)} != header {len(header)}")
                row = dict(zip(header, values))
                for key in _INT_COLUMNS:
                    row[key] = int(row[key])
                for key in _FLOAT_COLUMNS & row.keys():
                    row[key] = float(row[key])
                rows.append(row)
    if not rows:
        raise PlotError("no data rows found")
    return rows


def _group_label(key_columns, key) -> str:
    return " ".join(f"{c}={v}" for c, v in zip(key_columns, key))


def _load_references(path) -> list:
    with open(path) as fh:
        data = json.load(fh)
    refs = data.get("references")
    if not isinstance(refs, list):
        raise PlotError(f"{path}: expected a 'references' list")
    return refs


def build_figure(spec: PlotSpec):
    """Assemble the figure; returns (figure, curves) for inspection."""
    rows = load_rows(spec.csv_paths)
    for column, value in spec.filters.items():
        rows = [r for r in rows if str(r.get(column)) == str(value)]
    for column in spec.group_by:
        if rows and column not in rows[0]:
            raise PlotError(f"group-by column {column!r} not in the CSV schema")

    groups = {}
    for row in rows:
        key = tuple(row[c] for c in spec.group_by)
        groups.setdefault(key, []).append(row)
    if not groups:
        raise PlotError("selection matched no rows")

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        curves = []
        for index, key in enumerate(sorted(groups, key=str)):
            points = sorted(groups[key], key=lambda r: r["ebn0_db"])
            drawable = [p for p in points if p["bler"] > 0.0]
            if not drawable:
                continue
            x = np.array([p["ebn0_db"] for p in drawable])
            y = np.array([p["bler"] for p in drawable])
            low = np.array([max(p["bler"] - p["ci_low"], 0.0) for p in drawable])
            high = np.array([max(p["ci_high"] - p["bler"], 0.0) for p in drawable])
            label = _group_label(spec.group_by, key)
            ax.errorbar(x, y, yerr=np.vstack([low, high]),
                        marker=_MARKERS[index % len(_MARKERS)],
                        markersize=4.5, capsize=2.5, linewidth=1.2, label=label)
            curves.append(label)
        if spec.ref_path:
            for index, ref in enumerate(_load_references(spec.ref_path)):
                pts = ref.get("points", [])
                x = [p["ebn0_db"] for p in pts]
                y = [p["bler"] for p in pts]
                ax.plot(x, y, linestyle="none", marker=_REF_MARKERS[index % len(_REF_MARKERS)],
                        markersize=9, label=ref.get("label", "reference"))
        ax.set_yscale("log")
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel(spec.ylabel)
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="lower left")
        fig.tight_layout()
    return fig, curves


def render(spec: PlotSpec) -> str:
    """Render the figure to ``spec.out_path`` (PNG); deterministic output."""
    fig, _ = build_figure(spec)
    try:
        fig.savefig(spec.out_path, metadata={"Software": "blerplot"})
    finally:
        plt.close(fig)
    return spec.out_path
