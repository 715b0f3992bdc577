"""DET plots on normal-deviate axes, rendered with the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import DetPoint, probit  # noqa: E402

_TICKS = (0.001, 0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95)


def plot_det(curves: dict[str, list[DetPoint]], path, title: str | None = None) -> Path:
    """Save one DET line per named curve; the fused curve is drawn heavier."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5.5, 5.0))
    for name, pts in curves.items():
        p_fp = np.array([p.p_fp for p in pts])
        p_fn = np.array([p.p_fn for p in pts])
        ax.plot(probit(p_fp), probit(p_fn), label=name, linewidth=2.2 if name == "Fused" else 1.0)
    ticks = probit(np.array(_TICKS))
    labels = [f"{100 * t:g}" for t in _TICKS]
    ax.set_xticks(ticks, labels)
    ax.set_yticks(ticks, labels)
    lim = (probit(np.array([0.0005]))[0], probit(np.array([0.97]))[0])
    ax.set_xlim(lim)
    ax.set_ylim(lim)
    ax.plot(lim, lim, color="0.7", linewidth=0.6, linestyle=":")
    ax.set_xlabel("False positive rate (%)")
    ax.set_ylabel("False negative rate (%)")
    if title:
        ax.set_title(title)
    ax.grid(True, linewidth=0.3)
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    tmp = path.with_name(path.name + ".tmp.png")
    fig.savefig(tmp, dpi=120, metadata={"Software": None})
    plt.close(fig)
    tmp.replace(path)
    return path
