"""Static figure emitters for the report path (PNG via the Agg backend).

Figures are written next to the delimited tables so evaluation runs drop a
self-contained report directory.  PNG metadata is pinned so identical data
produces identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PNG_META = {"Software": "nfforge"}
_STRATEGY_LABEL = {"exhaustive": "Exhaustive", "two_stage": "Two-stage", "far_field": "Far-field"}


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def plot_rate_by_strategy(cells: dict, path: Path, split: str = "all") -> None:
    """Bar chart of mean achievable rate per training strategy."""
    names = [s for s in ("exhaustive", "two_stage", "far_field") if s in cells]
    rates = [cells[s][split]["mean_rate"] if cells[s].get(split) else 0.0 for s in names]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar([_STRATEGY_LABEL.get(n, n) for n in names], rates, color=["#2c7fb8", "#41b6c4", "#a1dab4"])
    ax.set_ylabel("Mean rate (bits/s/Hz)")
    ax.set_title(f"Beam training comparison ({split})")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_gain_cdf(gains_by_strategy: dict[str, list[float]], path: Path) -> None:
    """Empirical CDF of normalized beamforming gain per strategy."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, gains in gains_by_strategy.items():
        if not gains:
            continue
        x = np.sort(np.asarray(gains))
        y = np.arange(1, x.size + 1) / x.size
        ax.step(x, y, where="post", label=_STRATEGY_LABEL.get(name, name))
    ax.set_xlabel("Normalized beamforming gain")
    ax.set_ylabel("CDF")
    ax.set_xlim(0, 1.02)
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(loc="upper left")
    fig.tight_layout()
    _save(fig, path)


def plot_beam_timeline(frames: list[dict], path: Path, title: str = "") -> None:
    """Top-1 global index and its decomposed tuple over the frames of one trajectory."""
    t = [f["t"] for f in frames]
    top1 = [f["top5_global"][0] for f in frames]
    tuples = [f["top5_tuples"][0] for f in frames]
    fig, axes = plt.subplots(4, 1, figsize=(6, 7), sharex=True)
    axes[0].plot(t, top1, "o-", ms=3)
    axes[0].set_ylabel("global index")
    for i, name in enumerate(["azimuth idx", "zenith idx", "distance idx"]):
        axes[i + 1].plot(t, [tp[i] for tp in tuples], "o-", ms=3)
        axes[i + 1].set_ylabel(name)
    axes[-1].set_xlabel("time (s)")
    if title:
        axes[0].set_title(title)
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_scene_topview(scene, path: Path, trajectory=None, pathset=None, antenna: int = 0, target=None) -> None:
    """Top-down scene map with optional trajectory and ray polylines."""
    fig, ax = plt.subplots(figsize=(6, 6))
    b = scene.bounds
    ax.add_patch(plt.Rectangle((b.x0, b.y0), b.x1 - b.x0, b.y1 - b.y0, fill=False, ec="k", lw=1.2))
    for r in scene.roads:
        ax.add_patch(plt.Rectangle((r.x0, r.y0), r.x1 - r.x0, r.y1 - r.y0, fc="#cccccc", ec="none"))
    for bl in scene.buildings:
        fp = bl.footprint
        ax.add_patch(plt.Rectangle((fp.x0, fp.y0), fp.x1 - fp.x0, fp.y1 - fp.y0, fc="#8888bb", ec="k", lw=0.5))
        ax.text(*fp.center, f"{bl.height:.0f}m", ha="center", va="center", fontsize=6)
    ax.plot(scene.bs_position[0], scene.bs_position[1], "r^", ms=10, label="BS")
    if trajectory is not None:
        xy = np.array([p.position[:2] for p in trajectory.frames])
        ax.plot(xy[:, 0], xy[:, 1], "g.-", ms=4, lw=1, label=trajectory.mode.name)
    if pathset is not None and target is not None:
        o = scene.bs_position
        for p in pathset[antenna]:
            pts = np.array([o[:2]] + [np.asarray(ip)[:2] for ip in p.interaction_points] + [np.asarray(target)[:2]])
            style = "-" if p.is_los else "--"
            ax.plot(pts[:, 0], pts[:, 1], style, lw=0.8, alpha=0.8)
    ax.set_xlim(b.x0 - 6, b.x1 + 6)
    ax.set_ylim(b.y0 - 6, b.y1 + 6)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    _save(fig, path)
