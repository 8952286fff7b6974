"""Cohesion of candidate industries to a region's industrial portfolio.

Two measures, both evaluated against a presence indicator over the
network's industries:

* weighted closeness: sum of edge weights from the focal industry to the
  present industries, i.e. direct linkages only.
* strategic closeness: start a random walker uniformly on the present
  industries and let it take two weight-proportional steps; the
  probability mass landing on the focal industry rewards presence that is
  itself well inter-connected.

Both are computed for every industry in the network, present or not;
sample restrictions belong to the regression layer.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .panel import PARTITIONS

COHESION_HEADER = (
    "industry",
    "region",
    "period",
    "wc_all",
    "sc_all",
    "wc_excl_d",
    "wc_excl_m",
    "wc_overlap",
    "sc_excl_d",
    "sc_excl_m",
    "sc_overlap",
)


class CohesionWarning(UserWarning):
    """Degenerate presence configurations worth auditing."""


@dataclass(frozen=True)
class CohesionVector:
    measure: str
    partition: str
    region: str
    base_year: int
    values: dict


def _presence_vector(net, present):
    """Coerce a presence indicator into a 0/1 vector over net.codes.

    Accepts a mapping (industry -> truthy) or a boolean/0-1 array aligned
    with the network; industries missing from a mapping count as absent.
    """
    if isinstance(present, dict):
        x = np.array([1.0 if present.get(c) else 0.0 for c in net.codes])
    else:
        x = np.asarray(present, dtype=float)
        if x.shape != (net.n,):
            raise ValueError(f"presence vector has shape {x.shape}, expected ({net.n},)")
        x = (x != 0).astype(float)
    return x


def weighted_closeness(net, present, region="", base_year=0, partition="all"):
    """Sum of relatedness weights from each industry to the present set."""
    x = _presence_vector(net, present)
    values = net.weights @ x
    return CohesionVector(
        measure="wc",
        partition=partition,
        region=region,
        base_year=base_year,
        values=dict(zip(net.codes, values.tolist())),
    )


def _start_distribution(net, x, partition):
    """Uniform start mass over present industries, skipping isolated ones.

    Mass that would sit on a degree-0 present industry is spread uniformly
    over the remaining present industries (the walk cannot leave isolated
    nodes). Both that case and an empty present set raise CohesionWarning.
    """
    present = x > 0
    if not present.any():
        warnings.warn(
            f"empty present set for partition {partition!r}; cohesion walk is all zeros",
            CohesionWarning,
            stacklevel=3,
        )
        return np.zeros(net.n)
    degrees = net.degrees
    reachable = present & (degrees > 0)
    if not np.array_equal(reachable, present):
        if not reachable.any():
            warnings.warn(
                f"all present industries in partition {partition!r} are isolated; "
                "cohesion walk is all zeros",
                CohesionWarning,
                stacklevel=3,
            )
            return np.zeros(net.n)
        warnings.warn(
            f"partition {partition!r} has isolated present industries; their start "
            "mass was redistributed",
            CohesionWarning,
            stacklevel=3,
        )
    p0 = np.zeros(net.n)
    p0[reachable] = 1.0 / reachable.sum()
    return p0


def _walk(net, p0, steps):
    degrees = net.degrees
    inv = np.divide(1.0, degrees, out=np.zeros_like(degrees), where=degrees > 0)
    p = p0
    for _ in range(steps):
        p = (p * inv) @ net.weights
    return p


def strategic_closeness(net, present, steps=2, region="", base_year=0, partition="all"):
    """Random-walk mass per industry after ``steps`` weight-proportional hops."""
    x = _presence_vector(net, present)
    p0 = _start_distribution(net, x, partition)
    values = _walk(net, p0, steps)
    return CohesionVector(
        measure="sc",
        partition=partition,
        region=region,
        base_year=base_year,
        values=dict(zip(net.codes, values.tolist())),
    )


def cohesion_panel(net, cube, periods, steps=2):
    """All eight cohesion columns per (industry, region, period base year).

    The six partitioned measures drive the regression models; the two
    ``all``-partition columns are diagnostics. Presence is read off the
    cube at each period's base year; cube industries absent from the
    network are ignored, network industries absent from the cube count as
    not present.
    """
    cube_pos = {c: k for k, c in enumerate(cube.industries)}
    net_rows = [cube_pos.get(c, -1) for c in net.codes]
    known = np.array([k >= 0 for k in net_rows])
    rows_idx = np.array([k if k >= 0 else 0 for k in net_rows])

    frames = []
    for spec in periods:
        t = cube.year_index(spec.base_year)
        for ri, region in enumerate(cube.regions):
            cols = {}
            for partition in PARTITIONS:
                cube_mask = cube.partition_mask(partition, ri, t)
                x = np.where(known, cube_mask[rows_idx], False).astype(float)
                wc = net.weights @ x
                sc = _walk(net, _start_distribution(net, x, partition), steps)
                cols[f"wc_{partition}"] = wc
                cols[f"sc_{partition}"] = sc
            frame = pd.DataFrame(
                {
                    "industry": net.codes,
                    "region": region,
                    "period": spec.name,
                    "wc_all": cols["wc_all"],
                    "sc_all": cols["sc_all"],
                    "wc_excl_d": cols["wc_excl_d"],
                    "wc_excl_m": cols["wc_excl_m"],
                    "wc_overlap": cols["wc_overlap"],
                    "sc_excl_d": cols["sc_excl_d"],
                    "sc_excl_m": cols["sc_excl_m"],
                    "sc_overlap": cols["sc_overlap"],
                }
            )
            frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def write_cohesion(frame, path):
    frame.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
