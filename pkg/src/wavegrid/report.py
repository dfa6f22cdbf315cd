"""Static figures written next to the CSV outputs."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update(
    {
        "font.size": 9,
        "axes.spines.right": False,
        "axes.spines.top": False,
        "figure.dpi": 120,
        "savefig.bbox": "tight",
    }
)


def _image(ax, data, title, cmap="viridis", **kw):
    im = ax.imshow(np.asarray(data).T, origin="lower", cmap=cmap, **kw)
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    return im


def plot_demo(original, coeffs, reconstructed, path):
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.4))
    vmin, vmax = float(original.min()), float(original.max())
    fig.colorbar(_image(axes[0], original, "original", vmin=vmin, vmax=vmax), ax=axes[0], shrink=0.8)
    mag = np.log10(np.abs(coeffs) + 1e-12)
    fig.colorbar(_image(axes[1], mag, "log10 |coefficient|", cmap="magma"), ax=axes[1], shrink=0.8)
    fig.colorbar(_image(axes[2], reconstructed, "reconstructed", vmin=vmin, vmax=vmax), ax=axes[2], shrink=0.8)
    fig.savefig(path)
    plt.close(fig)


def plot_field(field, path, title=""):
    fig, ax = plt.subplots(figsize=(4, 3.4))
    fig.colorbar(_image(ax, field, title), ax=ax, shrink=0.8)
    fig.savefig(path)
    plt.close(fig)


def plot_ratio_series(series: dict, path, title="compression ratio per step"):
    """``series`` maps a label to metrics rows (dicts with step and ratio)."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for label, rows in series.items():
        ax.plot([r["step"] for r in rows], [r["ratio"] for r in rows], label=str(label), lw=1.2)
    ax.set_xlabel("time step")
    ax.set_ylabel("ratio")
    ax.set_title(title)
    ax.legend(fontsize=7, frameon=False)
    fig.savefig(path)
    plt.close(fig)


def plot_sweep(table, path):
    """Average ratio against threshold, one panel per codec, one line per level."""
    groups = defaultdict(lambda: defaultdict(list))
    for row in table:
        key = row["codec"] + (f" {row['chunk_size'] // 1024}KiB" if row["codec"] == "lz" else "")
        groups[key][row["levels"]].append((row["threshold"], row["average_ratio"]))
    fig, axes = plt.subplots(1, len(groups), figsize=(4 * len(groups), 3.2), squeeze=False)
    for ax, (name, by_level) in zip(axes[0], groups.items()):
        for lev, pts in sorted(by_level.items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=f"level {lev}")
        ax.set_title(name)
        ax.set_xlabel("threshold c")
        ax.set_ylabel("average ratio")
        ax.legend(fontsize=7, frameon=False)
    fig.savefig(path)
    plt.close(fig)


def plot_l2(table, path):
    rows = [r for r in table if r.get("final_l2_error") is not None]
    if not rows:
        return
    by_level = defaultdict(list)
    for r in rows:
        by_level[(r["codec"], r["levels"])].append((r["threshold"], r["final_l2_error"]))
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for (name, lev), pts in sorted(by_level.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=f"{name} level {lev}")
    ax.set_xlabel("threshold c")
    ax.set_ylabel("L2 error")
    ax.legend(fontsize=7, frameon=False)
    fig.savefig(path)
    plt.close(fig)


def plot_side_by_side(columns: dict, path, component=0, title=""):
    """Grid of snapshots: ``columns`` maps a label to ``{time: field}``."""
    labels = list(columns)
    times = sorted({t for snaps in columns.values() for t in snaps})
    fig, axes = plt.subplots(len(times), len(labels), figsize=(3.2 * len(labels), 2.9 * len(times)), squeeze=False)
    fields = [f[component] for snaps in columns.values() for f in snaps.values()]
    vmin = min(float(f.min()) for f in fields)
    vmax = max(float(f.max()) for f in fields)
    for i, t in enumerate(times):
        for j, label in enumerate(labels):
            ax = axes[i][j]
            snap = columns[label].get(t)
            if snap is None:
                ax.axis("off")
                continue
            _image(ax, snap[component], f"t={t:g}s, {label}", vmin=vmin, vmax=vmax)
    if title:
        fig.suptitle(title)
    fig.savefig(path)
    plt.close(fig)
