"""Descriptive statistics over the assembled analysis panel.

Entry and exit variables are summarized on their model samples while
cohesion variables use every row, so the reported N differs by variable.
Correlations follow the same convention pair by pair: a pair's sample is
the intersection of the masks attached to its two variables.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .panel import build_presence, employment_grid


@dataclass(frozen=True)
class DescriptorRow:
    variable: str
    n: int
    mean: float
    sd: float
    minimum: float
    maximum: float


def _masked(values, mask):
    values = np.asarray(values, dtype=float)
    if mask is None:
        return values
    return values[np.asarray(mask, dtype=bool)]


def describe(variables, masks=None):
    """Per-variable N, mean, sample standard deviation, min, and max.

    ``masks`` optionally restricts named variables to a boolean sample
    mask. Columns that end up empty are skipped with a warning. The
    standard deviation uses the n-1 denominator and is NaN for singleton
    columns.
    """
    masks = masks or {}
    rows = []
    for name, values in variables.items():
        data = _masked(values, masks.get(name))
        data = data[np.isfinite(data)]
        if len(data) == 0:
            warnings.warn(f"variable {name!r} has no observations; skipped", stacklevel=2)
            continue
        sd = float(np.std(data, ddof=1)) if len(data) > 1 else float("nan")
        rows.append(
            DescriptorRow(
                variable=name,
                n=int(len(data)),
                mean=float(np.mean(data)),
                sd=sd,
                minimum=float(np.min(data)),
                maximum=float(np.max(data)),
            )
        )
    return rows


def presence_size_summary(panel, threshold=5):
    """Presence and employment descriptors over every industry-region-year cell.

    Indicators count presence by ownership type and ownership set;
    employment magnitudes attribute each cell's headcount to its set
    (domestic employment for exclusive-domestic cells, MNE employment for
    exclusive-MNE cells, combined employment for overlapping cells), with
    zeros everywhere else.
    """
    _, _, _, emp_dom, emp_mne = employment_grid(panel)
    cube = build_presence(panel, threshold)
    variables = {
        "x_dom": cube.dom.ravel().astype(float),
        "x_mne": cube.mne.ravel().astype(float),
        "x_excl_d": cube.excl_dom.ravel().astype(float),
        "x_excl_m": cube.excl_mne.ravel().astype(float),
        "x_overlap": cube.overlap.ravel().astype(float),
        "emp_dom": emp_dom.ravel().astype(float),
        "emp_mne": emp_mne.ravel().astype(float),
        "emp_excl_d": (emp_dom * cube.excl_dom).ravel().astype(float),
        "emp_excl_m": (emp_mne * cube.excl_mne).ravel().astype(float),
        "emp_overlap": ((emp_dom + emp_mne) * cube.overlap).ravel().astype(float),
    }
    return describe(variables)


def pairwise_correlations(columns, sample_masks=None):
    """Pearson correlations with per-pair sample restrictions.

    Each pair is evaluated on the intersection of its variables' masks
    (all rows when neither variable has one). Pairs with fewer than two
    observations or zero variance are recorded as NaN, never coerced to 0.

    Returns (square matrix DataFrame, long DataFrame with a ``sample``
    column naming which masks applied).
    """
    sample_masks = sample_masks or {}
    names = list(columns)
    if len(names) < 2:
        raise ValueError("need at least two columns to correlate")
    arrays = {name: np.asarray(columns[name], dtype=float) for name in names}
    n_rows = len(arrays[names[0]])
    for name in names:
        if len(arrays[name]) != n_rows:
            raise ValueError("all columns must have the same length")

    matrix = pd.DataFrame(np.nan, index=names, columns=names)
    long_rows = []
    for i, a in enumerate(names):
        for b in names[i:]:
            mask = np.ones(n_rows, dtype=bool)
            applied = []
            for name in (a, b):
                if name in sample_masks:
                    mask &= np.asarray(sample_masks[name], dtype=bool)
                    applied.append(name)
            xa, xb = arrays[a][mask], arrays[b][mask]
            ok = np.isfinite(xa) & np.isfinite(xb)
            xa, xb = xa[ok], xb[ok]
            if len(xa) < 2 or np.std(xa) == 0 or np.std(xb) == 0:
                value = float("nan")
            else:
                value = float(np.corrcoef(xa, xb)[0, 1])
            matrix.loc[a, b] = value
            matrix.loc[b, a] = value
            sample = "+".join(dict.fromkeys(applied)) if applied else "all"
            long_rows.append((a, b, value, sample, int(len(xa))))
    long = pd.DataFrame(
        long_rows, columns=["var_a", "var_b", "correlation", "sample", "n"]
    )
    return matrix, long


def write_descriptors(rows, path, samples=None):
    samples = samples or {}
    frame = pd.DataFrame(
        [
            (
                row.variable,
                samples.get(row.variable, "all"),
                row.n,
                row.mean,
                row.sd,
                row.minimum,
                row.maximum,
            )
            for row in rows
        ],
        columns=["variable", "sample", "n", "mean", "sd", "min", "max"],
    )
    frame.to_csv(path, index=False, float_format="%.12g", na_rep="NA", lineterminator="\n")


def write_correlations(long, path):
    long.to_csv(path, index=False, float_format="%.12g", na_rep="NA", lineterminator="\n")
