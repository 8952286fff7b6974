"""Seeded synthetic fixtures with a known entry data-generating process.

Flows come from a planted block structure (dense within blocks, sparse
across), so the derived relatedness network has real communities. Yearly
domestic entries are then drawn from a probit law whose latent index uses
the true cohesion measures recomputed each year, which makes end-to-end
effect-recovery tests possible.

All randomness flows through a single numpy PCG64 generator seeded from
the config, so a given seed reproduces the fixture bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import ndtr

from .errors import ValidationError
from .ingest import (
    Crosswalk,
    EmploymentPanel,
    FlowMatrix,
    write_crosswalk,
    write_flows,
    write_panel,
)
from .relatedness import build_relatedness

START_YEAR = 2006
WITHIN_BLOCK_RATE = 40.0
CROSS_BLOCK_RATE = 0.8
ALPHA_ENTRY = -1.6
ALPHA_EXIT = -1.5
P_DOM_START = 0.35
P_MNE_START = 0.18
P_DOM_SMALL = 0.20
P_MNE_SMALL = 0.15
P_MNE_APPEAR = 0.03
P_MNE_DROP = 0.04
DOM_SIZE_MEAN = 8
MNE_SIZE_MEAN = 15

_TERM_NAMES = (
    "wc_all",
    "wc_excl_d",
    "wc_excl_m",
    "wc_overlap",
    "sc_all",
    "sc_excl_d",
    "sc_excl_m",
    "sc_overlap",
)


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_industries: int = 40
    n_regions: int = 8
    years: int = 4
    n_blocks: int = 4
    entry_effect: dict = field(default_factory=dict)
    noise_scale: float = 1.0
    threshold: int = 5

    def __post_init__(self):
        if self.n_industries < 2 * self.n_blocks:
            raise ValidationError("need at least two industries per block")
        if self.years < 2:
            raise ValidationError("need at least two years to observe transitions")
        if self.n_regions < 1 or self.n_blocks < 1:
            raise ValidationError("regions and blocks must be positive")
        if self.noise_scale <= 0:
            raise ValidationError("noise_scale must be positive")
        if self.n_industries > 100 * self.n_blocks:
            raise ValidationError("at most 100 industries per block")
        for term in self.entry_effect:
            if term not in _TERM_NAMES:
                raise ValidationError(f"unknown cohesion term {term!r} in entry_effect")
        object.__setattr__(self, "entry_effect", dict(self.entry_effect))


def _codes_and_blocks(config):
    codes, blocks = [], []
    for i in range(config.n_industries):
        b = (i * config.n_blocks) // config.n_industries
        k = i - (b * config.n_industries + config.n_blocks - 1) // config.n_blocks
        codes.append(f"{10 + b}{k:02d}")
        blocks.append(b)
    return codes, np.array(blocks)


def _draw_flows(rng, blocks):
    n = len(blocks)
    same_block = blocks[:, None] == blocks[None, :]
    rates = np.where(same_block, WITHIN_BLOCK_RATE, CROSS_BLOCK_RATE)
    counts = rng.poisson(rates).astype(float)
    np.fill_diagonal(counts, 0.0)
    return counts


def _partition_masks(emp_dom, emp_mne, threshold):
    dom = emp_dom > threshold
    mne = emp_mne > threshold
    return {
        "all": dom | mne,
        "excl_d": dom & (emp_mne == 0),
        "excl_m": mne & (emp_dom == 0),
        "overlap": dom & mne,
    }


def _two_step_mass(weights, inv_degrees, presence):
    """Start mass uniform on present, positive-degree industries; walk twice."""
    reach = presence.astype(float) * (inv_degrees > 0)[:, None]
    col = reach.sum(axis=0)
    p = np.divide(reach, col[None, :], out=np.zeros_like(reach), where=col[None, :] > 0)
    for _ in range(2):
        p = weights @ (p * inv_degrees[:, None])
    return p


def _latent_terms(weights, inv_degrees, masks, terms):
    out = {}
    for term in terms:
        measure, partition = term.split("_", 1)
        x = masks[partition].astype(float)
        if measure == "wc":
            out[term] = weights @ x
        else:
            out[term] = _two_step_mass(weights, inv_degrees, x)
    return out


def generate(config):
    """Produce (FlowMatrix, EmploymentPanel, ground-truth record).

    The panel starts from random ownership-split presence and evolves one
    year at a time: absent domestic cells enter with probability
    Phi(alpha + sum of entry_effect coefficients times the matching
    cohesion term), present cells exit with a constant hazard, and
    surviving employment gets multiplicative noise scaled by noise_scale.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    codes, blocks = _codes_and_blocks(config)
    counts = _draw_flows(rng, blocks)
    flows = FlowMatrix(codes=tuple(codes), counts=counts)
    net = build_relatedness(flows)
    degrees = net.degrees
    inv_degrees = np.divide(
        1.0, degrees, out=np.zeros_like(degrees), where=degrees > 0
    )

    n, r = config.n_industries, config.n_regions
    thr = config.threshold
    shape = (n, r)

    emp_dom = np.zeros(shape, dtype=np.int64)
    emp_mne = np.zeros(shape, dtype=np.int64)
    present0 = rng.random(shape) < P_DOM_START
    emp_dom[present0] = thr + 1 + rng.poisson(DOM_SIZE_MEAN, int(present0.sum()))
    small = (~present0) & (rng.random(shape) < P_DOM_SMALL)
    emp_dom[small] = rng.integers(1, thr + 1, int(small.sum()))
    mne0 = rng.random(shape) < P_MNE_START
    emp_mne[mne0] = thr + 1 + rng.poisson(MNE_SIZE_MEAN, int(mne0.sum()))
    small_m = (~mne0) & (rng.random(shape) < P_MNE_SMALL)
    emp_mne[small_m] = rng.integers(1, thr + 1, int(small_m.sum()))

    effect_terms = tuple(sorted(config.entry_effect))
    records = []

    def snapshot(year):
        nz = (emp_dom > 0) | (emp_mne > 0)
        for i, j in zip(*np.nonzero(nz)):
            records.append(
                (codes[i], f"R{j + 1:02d}", year, int(emp_dom[i, j]), int(emp_mne[i, j]))
            )

    snapshot(START_YEAR)
    for step in range(1, config.years):
        masks = _partition_masks(emp_dom, emp_mne, thr)
        terms = _latent_terms(net.weights, inv_degrees, masks, effect_terms)
        index = np.full(shape, ALPHA_ENTRY)
        for term in effect_terms:
            index += config.entry_effect[term] * terms[term]

        dom_present = emp_dom > thr
        entered = (~dom_present) & (rng.random(shape) < ndtr(index))
        exited = dom_present & (rng.random(shape) < ndtr(ALPHA_EXIT))
        jitter = np.exp(0.05 * config.noise_scale * rng.normal(size=shape))

        survivors = dom_present & ~exited
        emp_dom[survivors] = np.maximum(
            thr + 1, np.rint(emp_dom[survivors] * jitter[survivors]).astype(np.int64)
        )
        emp_dom[exited] = rng.integers(0, thr + 1, int(exited.sum()))
        emp_dom[entered] = thr + 1 + rng.poisson(DOM_SIZE_MEAN, int(entered.sum()))

        mne_present = emp_mne > thr
        dropped = mne_present & (rng.random(shape) < P_MNE_DROP)
        appeared = (~mne_present) & (rng.random(shape) < P_MNE_APPEAR)
        jitter_m = np.exp(0.05 * config.noise_scale * rng.normal(size=shape))
        keep_m = mne_present & ~dropped
        emp_mne[keep_m] = np.maximum(
            thr + 1, np.rint(emp_mne[keep_m] * jitter_m[keep_m]).astype(np.int64)
        )
        emp_mne[dropped] = 0
        emp_mne[appeared] = thr + 1 + rng.poisson(MNE_SIZE_MEAN, int(appeared.sum()))

        snapshot(START_YEAR + step)

    panel = EmploymentPanel(
        records=pd.DataFrame(
            records, columns=["industry", "region", "year", "emp_dom", "emp_mne"]
        )
    )
    truth = {
        "generator": "PCG64",
        "seed": config.seed,
        "alpha_entry": ALPHA_ENTRY,
        "alpha_exit": ALPHA_EXIT,
        "entry_effect": dict(config.entry_effect),
        "noise_scale": config.noise_scale,
        "threshold": config.threshold,
        "n_industries": config.n_industries,
        "n_regions": config.n_regions,
        "n_blocks": config.n_blocks,
        "years": config.years,
        "start_year": START_YEAR,
        "within_block_rate": WITHIN_BLOCK_RATE,
        "cross_block_rate": CROSS_BLOCK_RATE,
    }
    return flows, panel, truth


def write_fixture(config, out_dir):
    """Generate and write flows.csv, panel.csv, an identity crosswalk, and
    the ground-truth record, returning the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    flows, panel, truth = generate(config)
    paths = {
        "flows": out / "flows.csv",
        "panel": out / "panel.csv",
        "crosswalk": out / "crosswalk.csv",
        "ground_truth": out / "ground_truth.json",
    }
    write_flows(flows, paths["flows"])
    write_panel(panel, paths["panel"])
    write_crosswalk(Crosswalk(pairs=tuple((c, c) for c in flows.codes)), paths["crosswalk"])
    with open(paths["ground_truth"], "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
