"""Figure rendering for emitted CSV tables.

Kept apart from the certification path: experiments write delimited data and
JSON only, and this module turns those files into log-log decay plots on
demand (``ewkv plot`` or ``ewkv run --plot``).
"""

from __future__ import annotations

import csv
import os

import numpy as np

__all__ = ["render_csv"]


def _load(path: str):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.asarray(rows)
    return header, data


def render_csv(path: str, out_path: str | None = None) -> str:
    """Render one emitted table to a PNG next to it; returns the PNG path.

    The first column is the abscissa; decay tables get log-log axes.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, data = _load(path)
    if data.size == 0:
        raise ValueError("no rows in %s" % path)
    out_path = out_path or os.path.splitext(path)[0] + ".png"

    x = data[:, 0]
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    loglog = header[0] == "t" and np.all(x > 0)
    for j in range(1, data.shape[1]):
        y = data[:, j]
        if loglog and np.all(y > 0):
            ax.loglog(1.0 + x, y, marker="o", ms=3, lw=1, label=header[j])
        else:
            ax.plot(x, y, marker="o", ms=3, lw=1, label=header[j])
    ax.set_xlabel("1 + t" if loglog else header[0])
    ax.grid(True, which="both", alpha=0.3)
    if data.shape[1] > 1:
        ax.legend(fontsize=8)
    ax.set_title(os.path.basename(path), fontsize=9)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
