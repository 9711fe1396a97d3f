"""SVG line charts rendered from a summary CSV."""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..errors import MissingColumns  # noqa: E402

MODES = ("vs_iter", "vs_time")
_REQUIRED = {
    "vs_iter": ("algorithm", "iter", "sd_node1"),
    "vs_time": ("algorithm", "sd_node1", "comm_s_cum", "compute_s_cum"),
}
_SUMMARY_COLUMNS = {"algorithm", "iter", "n_trials"}


def load_series(summary_csv, mode):
    """``{label: (x, y)}`` read from `summary_csv`, in file order.

    A leading column that is not a summary column (as written by a sweep)
    becomes part of the series label.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    with open(summary_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    missing = [c for c in _REQUIRED[mode] if c not in header]
    if missing:
        raise MissingColumns(f"{summary_csv}: missing column(s) {', '.join(missing)}")
    key = header[0] if header and header[0] not in _SUMMARY_COLUMNS else None

    series = {}
    for row in rows:
        label = row["algorithm"] if key is None else f"{row['algorithm']} ({key}={row[key]})"
        if mode == "vs_iter":
            x = float(row["iter"])
        else:
            x = float(row["comm_s_cum"]) + float(row["compute_s_cum"])
        xs, ys = series.setdefault(label, ([], []))
        xs.append(x)
        ys.append(float(row["sd_node1"]))
    return series


def emit_plot(summary_csv, mode, out_path, title=None):
    """Write a log-scale SD chart with one polyline per series.

    Each series is drawn as a ``<g id="series:<label>">`` group so the file
    can be checked structurally. Output is byte-stable for a given CSV.
    """
    series = load_series(summary_csv, mode)
    if not series:
        raise ValueError(f"{summary_csv}: no series to plot")
    out_path = Path(out_path)
    with plt.rc_context({"svg.hashsalt": "difaltgdmin", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        for label, (xs, ys) in series.items():
            ax.plot(xs, ys, label=label, gid=f"series:{label}", linewidth=1.4)
        ax.set_yscale("log")
        ax.set_xlabel("iteration" if mode == "vs_iter" else "execution time (s)")
        ax.set_ylabel("mean SD(U_1, U*)")
        if title:
            ax.set_title(title)
        ax.grid(True, which="major", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return out_path
