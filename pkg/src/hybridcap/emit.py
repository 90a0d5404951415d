"""Write a :class:`SweepTable` as CSV, JSON or SVG."""

from __future__ import annotations

import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import HybridCapError

FORMATS = ("csv", "json", "svg")


class EmitError(HybridCapError, OSError):
    """Output path could not be written."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in np.atleast_2d(rows):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def read_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.rstrip("\n").split("\n")
    cols = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return cols, np.asarray(rows, dtype=float).reshape(len(rows), len(cols))


def _json_value(x):
    x = float(x)
    return x if math.isfinite(x) else None


def to_json(table) -> str:
    doc = {
        "columns": list(table.columns),
        "rows": [[_json_value(v) for v in row] for row in table.rows],
        "metadata": table.metadata | {"flagged": table.flagged},
    }
    return json.dumps(doc, indent=2, sort_keys=False, default=_default) + "\n"


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "value"):
        return obj.value
    return str(obj)


_AXIS_LABELS = {
    "frequency": "frequency f [Hz]",
    "temperature": "temperature T [K]",
    "bandwidth": "bandwidth B [Hz]",
    "photons": "photons per use p",
    "snr": "SNR",
    "amplitude": "noise amplitude n",
    "n": "noise amplitude n",
}


def to_svg(table) -> str:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed ids so identical tables render to identical bytes
    matplotlib.rcParams["svg.hashsalt"] = "hybridcap"
    x_name = table.columns[0]
    x = table.rows[:, 0]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name in table.plot_columns or table.columns[1:]:
        ax.plot(x, table.column(name), label=name)
    ax.set_xlabel(_AXIS_LABELS.get(x_name, x_name))
    ax.set_ylabel(table.metadata.get("y_label", _y_label(table)))
    if x_name == "frequency" and x.size > 1 and x[0] > 0:
        ax.set_xscale("log")
    if len(table.columns) > 1:
        ax.legend(fontsize="small")
    ax.grid(True, alpha=0.3)
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def _y_label(table) -> str:
    fig = table.metadata.get("config", {}).get("figure")
    if fig in ("fig1", "fig2"):
        return "normalized |N_xy|" if table.metadata.get("normalize") == "max_to_one" else "|N_xy| [W/Hz]"
    if fig == "fig3":
        return "probability density"
    if fig == "fig4":
        return "capacity C/B [bits/s/Hz]"
    return "value"


def render(table, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(table.columns, table.rows)
    if fmt == "json":
        return to_json(table)
    if fmt == "svg":
        return to_svg(table)
    raise ValueError(f"format must be one of {FORMATS}")


def emit(table, fmt: str, path=None) -> str:
    """Render ``table``; write it to ``path`` when given. Returns the text."""
    text = render(table, fmt)
    if path is not None:
        write_text(text, path)
    return text


def write_text(text: str, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc}") from exc
