"""Static figures written next to the CSV outputs (PNG, PDF or SVG by suffix)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# strip timestamps so repeated renders are byte-identical
_METADATA = {".png": {"Software": None}, ".pdf": {"Creator": None, "CreationDate": None},
             ".svg": {"Date": None}}


def _save(fig, path) -> Path:
    path = Path(path)
    meta = _METADATA.get(path.suffix.lower(), {})
    fig.savefig(path, bbox_inches="tight", dpi=150, metadata=meta)
    plt.close(fig)
    return path


def _bars(labels: list[str], columns: dict[str, list[float]], path, xlabel: str) -> Path:
    n, k = len(labels), max(len(columns), 1)
    height = 0.8 / k
    fig, ax = plt.subplots(figsize=(6.5, 0.25 * n * k + 1.2))
    ypos = np.arange(n)
    top = 0.0
    for i, (name, vals) in enumerate(columns.items()):
        ax.barh(ypos + (i - (k - 1) / 2) * height, vals, height=height, label=name)
        top = max(top, max(vals, default=0.0))
    ax.set_yticks(ypos)
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel(xlabel)
    ax.set_xlim(0, max(top, 1e-9) * 1.05)
    if len(columns) > 1:
        ax.legend(loc="lower right", frameon=False)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)


def importance_chart(features: list[str], columns: dict[str, list[float]], path) -> Path:
    """Grouped horizontal bars, one group per feature, one bar per model."""
    return _bars(features, columns, path, "Relative Importance")


def sweep_chart(result, path) -> Path:
    """Baseline vs protected discrimination for every swept feature."""
    names = [r.feature for r in result.rows]
    cols = {"Baseline": [r.raw_discrimination for r in result.rows],
            "Protected": [r.protected_discrimination for r in result.rows]}
    return _bars(names, cols, path, "Discrimination")
