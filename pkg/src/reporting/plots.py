"""SVG figures for the analysis tables.

Figures are written with the Agg backend, a fixed SVG hash salt and no date
metadata so that repeated runs produce identical files.
"""
import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)

ATTRIBUTE_COLORS = {"identity": "#1f77b4", "gender": "#d62728", "viewpoint": "#2ca02c", "none": "#7f7f7f"}
_HASH_SALT = "facecode"


def save_svg(fig: plt.Figure, path: Union[str, Path]) -> Path:
    """Save ``fig`` as a reproducible SVG and close it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": _HASH_SALT, "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    logger.debug(f"Saved figure {path}")
    return path


def plot_ablation(summary: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Mean verification AUC (min-max band) against the number of units."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ordered = summary.sort_values("size")
    ax.fill_between(ordered["size"], ordered["min_auc"], ordered["max_auc"], alpha=0.2)
    ax.plot(ordered["size"], ordered["mean_auc"], marker="o")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("units sampled")
    ax.set_ylabel("verification AUC")
    ax.set_ylim(0.45, 1.01)
    ax.axhline(0.5, color="grey", linestyle=":", linewidth=1)
    return save_svg(fig, path)


def plot_decode_ablation(table: pd.DataFrame, path: Union[str, Path], ylabel: str,
                         chance: Optional[float] = None) -> Path:
    """Per-replicate decoding metric against subspace size."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(table["size"], table["metric"], s=6, alpha=0.4)
    means = table.groupby("size")["metric"].mean()
    ax.plot(means.index, means.to_numpy(), color="black", marker="o")
    if chance is not None:
        ax.axhline(chance, color="grey", linestyle=":", linewidth=1, label="chance")
        ax.legend(frameon=False)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("units sampled")
    ax.set_ylabel(ylabel)
    return save_svg(fig, path)


def plot_effect_sizes(effects: Mapping[str, Sequence[float]], path: Union[str, Path],
                      xlabel: str = "unit") -> Path:
    """r^2 per unit (or PC) for each attribute."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for attribute, values in effects.items():
        ax.plot(np.arange(len(values)), values, label=attribute, linewidth=0.8,
                color=ATTRIBUTE_COLORS.get(attribute))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("effect size (r$^2$)")
    ax.legend(frameon=False)
    return save_svg(fig, path)


def plot_histogram(counts: Sequence[int], edges: Sequence[float], path: Union[str, Path],
                   xlabel: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    edges = np.asarray(edges)
    ax.stairs(np.asarray(counts), edges, fill=True, alpha=0.6)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    return save_svg(fig, path)


def plot_windows(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    """One panel per task: metric against the first PC of the window."""
    tasks = list(dict.fromkeys(table["task"]))
    fig, axes = plt.subplots(1, len(tasks), figsize=(5 * len(tasks), 4), squeeze=False)
    for ax, task in zip(axes[0], tasks):
        rows = table[table["task"] == task]
        ax.plot(rows["start"] + 1, rows["metric"], color=ATTRIBUTE_COLORS.get(task))
        ax.set_title(task)
        ax.set_xlabel("first PC in window")
    axes[0][0].set_ylabel("metric")
    return save_svg(fig, path)


def plot_directions(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """|cos| between each PC and the identity, gender and viewpoint directions."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for attribute in ("identity", "gender", "viewpoint"):
        ax.plot(frame["pc"] + 1, frame[f"{attribute}_similarity"], label=attribute,
                linewidth=0.8, color=ATTRIBUTE_COLORS[attribute])
    ax.set_xlabel("PC")
    ax.set_ylabel("|cos|")
    ax.legend(frameon=False)
    return save_svg(fig, path)


def plot_alignment(groups: Dict[str, np.ndarray], path: Union[str, Path], bins: int = 30) -> Path:
    """Distribution of unit-PC similarities pooled over units, per PC assignment."""
    fig, ax = plt.subplots(figsize=(6, 4))
    edges = np.linspace(0.0, 1.0, bins + 1)
    for label, values in groups.items():
        ax.hist(values.ravel(), bins=edges, density=True, histtype="step",
                label=label, color=ATTRIBUTE_COLORS.get(label))
    ax.set_xlabel("|cos(unit, PC)|")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    return save_svg(fig, path)


__all__ = [
    'save_svg', 'plot_ablation', 'plot_decode_ablation', 'plot_effect_sizes',
    'plot_histogram', 'plot_windows', 'plot_directions', 'plot_alignment'
]
