"""Report figures rendered next to the delimited outputs.

Only summary charts are drawn here (survival curves and entry-count
bars); network layout rendering is left to dedicated graph tools working
off the exported edge/node files. PNGs are written without software
metadata so repeated runs produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": None}}


def render_structural_change(forward, backward, path):
    """Line chart of presence-survival shares, anchored both ways."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(
        forward["year"],
        forward["share"],
        marker="o",
        color="tab:blue",
        label=f"share still present since {int(forward['year'].iloc[0])}",
    )
    ax.plot(
        backward["year"],
        backward["share"],
        marker="s",
        linestyle="--",
        color="tab:orange",
        label=f"share surviving to {int(backward['year'].iloc[-1])}",
    )
    ax.set_xlabel("year")
    ax.set_ylabel("share of domestic presences")
    ax.set_ylim(0.0, 1.05)
    ax.legend(frameon=False)
    ax.set_title("Domestic structural change")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def render_entry_counts(by_year, by_region, by_sector, path):
    """Bar charts of domestic entries into exclusive-MNE industries."""
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    panels = (
        (axes[0], by_year, "year", "by year"),
        (axes[1], by_region, "region", "by region"),
        (axes[2], by_sector, "sector", "by sector"),
    )
    for ax, frame, key, label in panels:
        ax.bar([str(v) for v in frame[key]], frame["count"], color="tab:blue")
        ax.set_title(label)
        ax.set_ylabel("entries")
        ax.tick_params(axis="x", rotation=90, labelsize=7)
    fig.suptitle("Domestic entries into exclusive-MNE industries")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
