"""Presence indicators, ownership partitions, and entry/exit labels.

An industry counts as present in a region-year when its employment is
strictly above the threshold (default 5). Ownership splits give three
mutually exclusive sets: exclusive-domestic (domestic above threshold,
zero MNE employment), exclusive-MNE (the mirror image), and overlapping
(both above threshold). Cells where the minority ownership has some
employment at or below the threshold belong to none of the three.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ValidationError

PARTITIONS = ("all", "excl_d", "excl_m", "overlap")

TRANSITIONS_HEADER = (
    "industry",
    "region",
    "period",
    "entry",
    "exit",
    "in_entry_sample",
    "in_exit_sample",
)


@dataclass(frozen=True)
class PeriodSpec:
    """Named observation window; transitions compare base vs end year only."""

    name: str
    base_year: int
    end_year: int

    def __post_init__(self):
        if self.base_year >= self.end_year:
            raise ValidationError(
                f"period {self.name!r}: base_year must precede end_year"
            )


@dataclass(frozen=True)
class PresenceCube:
    """Boolean presence indicators on an (industry, region, year) grid."""

    industries: tuple
    regions: tuple
    years: tuple
    dom: np.ndarray
    mne: np.ndarray
    excl_dom: np.ndarray
    excl_mne: np.ndarray
    overlap: np.ndarray
    threshold: int = 5

    def __post_init__(self):
        shape = (len(self.industries), len(self.regions), len(self.years))
        for name in ("dom", "mne", "excl_dom", "excl_mne", "overlap"):
            arr = np.asarray(getattr(self, name), dtype=bool)
            if arr.shape != shape:
                raise ValidationError(f"{name} has shape {arr.shape}, expected {shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "industries", tuple(self.industries))
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "years", tuple(self.years))

    def year_index(self, year):
        try:
            return self.years.index(year)
        except ValueError:
            raise ValidationError(f"year {year} not covered by the panel")

    def partition_mask(self, partition, region_idx, year_idx):
        """Presence indicator vector over industries for one partition.

        ``all`` means present under either ownership type; the other three
        are the mutually exclusive ownership sets.
        """
        if partition == "all":
            arr = self.dom | self.mne
        elif partition == "excl_d":
            arr = self.excl_dom
        elif partition == "excl_m":
            arr = self.excl_mne
        elif partition == "overlap":
            arr = self.overlap
        else:
            raise ValidationError(f"unknown partition {partition!r}")
        return arr[:, region_idx, year_idx]


def employment_grid(panel):
    """Zero-filled employment arrays on the full (industry, region, year) grid.

    Returns (industries, regions, years, emp_dom, emp_mne); cells without a
    panel record hold zero employment.
    """
    if not len(panel):
        raise ValidationError("cannot build presence from an empty panel")
    industries = panel.industries()
    regions = panel.regions()
    years = panel.years()
    ind_idx = {c: k for k, c in enumerate(industries)}
    reg_idx = {r: k for k, r in enumerate(regions)}
    yr_idx = {y: k for k, y in enumerate(years)}

    shape = (len(industries), len(regions), len(years))
    emp_dom = np.zeros(shape, dtype=np.int64)
    emp_mne = np.zeros(shape, dtype=np.int64)
    rec = panel.records
    i = rec["industry"].map(ind_idx).to_numpy()
    r = rec["region"].map(reg_idx).to_numpy()
    y = rec["year"].map(yr_idx).to_numpy()
    emp_dom[i, r, y] = rec["emp_dom"].to_numpy()
    emp_mne[i, r, y] = rec["emp_mne"].to_numpy()
    return industries, regions, years, emp_dom, emp_mne


def build_presence(panel, threshold=5):
    """Derive the presence cube from an employment panel.

    Cells absent from the panel count as zero employment. Presence is a
    strict inequality: employment must exceed the threshold.
    """
    industries, regions, years, emp_dom, emp_mne = employment_grid(panel)
    dom = emp_dom > threshold
    mne = emp_mne > threshold
    return PresenceCube(
        industries=industries,
        regions=regions,
        years=years,
        dom=dom,
        mne=mne,
        excl_dom=dom & (emp_mne == 0),
        excl_mne=mne & (emp_dom == 0),
        overlap=dom & mne,
        threshold=threshold,
    )


@dataclass(frozen=True)
class TransitionTable:
    """Entry/exit labels per (industry, region, period).

    Rows whose industry was absent at the period base year form the entry
    sample; rows present at base form the exit sample. The two samples are
    disjoint by construction.
    """

    frame: pd.DataFrame
    periods: tuple

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(self.periods))
        object.__setattr__(self, "frame", self.frame.reset_index(drop=True))

    def period_spec(self, name):
        for spec in self.periods:
            if spec.name == name:
                return spec
        raise ValidationError(f"unknown period {name!r}")


def label_transitions(cube, periods):
    """Label domestic entries and exits for each period.

    Entry: absent at base, present at end. Exit: present at base, absent
    at end. Only the two endpoint years matter; within-period flicker is
    ignored.
    """
    rows = []
    for spec in periods:
        b = cube.year_index(spec.base_year)
        e = cube.year_index(spec.end_year)
        base = cube.dom[:, :, b]
        end = cube.dom[:, :, e]
        entry = (~base) & end
        exit_ = base & (~end)
        for ri, region in enumerate(cube.regions):
            for ii, industry in enumerate(cube.industries):
                rows.append(
                    (
                        industry,
                        region,
                        spec.name,
                        int(entry[ii, ri]),
                        int(exit_[ii, ri]),
                        int(not base[ii, ri]),
                        int(base[ii, ri]),
                    )
                )
    frame = pd.DataFrame(rows, columns=list(TRANSITIONS_HEADER))
    return TransitionTable(frame=frame, periods=tuple(periods))


def structural_change_curve(cube, anchor_year, direction="forward"):
    """Share of presences each year that survive from (or to) an anchor.

    Forward: of the industry-region presences in year t, the share that
    was already present in the anchor year. Backward: the share of year
    t's presences that still exist in the final cube year. Years whose
    presence set is empty get NaN, never 0.
    """
    if direction not in ("forward", "backward"):
        raise ValidationError(f"direction must be forward or backward, got {direction!r}")
    a = cube.year_index(anchor_year)
    ref = cube.dom[:, :, a] if direction == "forward" else cube.dom[:, :, -1]
    out = []
    for t, year in enumerate(cube.years):
        current = cube.dom[:, :, t]
        denom = int(current.sum())
        share = float(np.nan) if denom == 0 else float((current & ref).sum() / denom)
        out.append((year, share))
    return pd.DataFrame(out, columns=["year", "share"])


def entry_counts(table, cube, filter="into_exclusive_mne", group_by="year"):
    """Count entries grouped by period base year, region, or sector prefix.

    ``into_exclusive_mne`` keeps only entries whose cell was an
    exclusive-MNE industry at the period base year; ``all`` counts every
    entry. All group levels appear in the output, including zero counts,
    so totals are conserved across grouping choices.
    """
    if filter not in ("into_exclusive_mne", "all"):
        raise ValidationError(f"unknown filter {filter!r}")
    if group_by not in ("year", "region", "sector_prefix"):
        raise ValidationError(f"unknown group_by {group_by!r}")

    base_year = {spec.name: spec.base_year for spec in table.periods}
    base_idx = {spec.name: cube.year_index(spec.base_year) for spec in table.periods}
    ind_idx = {c: k for k, c in enumerate(cube.industries)}
    reg_idx = {r: k for k, r in enumerate(cube.regions)}

    if group_by == "year":
        levels = sorted({spec.base_year for spec in table.periods})
        key_col = "year"
    elif group_by == "region":
        levels = list(cube.regions)
        key_col = "region"
    else:
        levels = sorted({c[:2] for c in cube.industries})
        key_col = "sector"

    counts = {level: 0 for level in levels}
    entries = table.frame[table.frame["entry"] == 1]
    for row in entries.itertuples(index=False):
        if filter == "into_exclusive_mne":
            cell = cube.excl_mne[
                ind_idx[row.industry], reg_idx[row.region], base_idx[row.period]
            ]
            if not cell:
                continue
        if group_by == "year":
            key = base_year[row.period]
        elif group_by == "region":
            key = row.region
        else:
            key = row.industry[:2]
        counts[key] += 1
    return pd.DataFrame(
        [(level, counts[level]) for level in levels], columns=[key_col, "count"]
    )


def write_transitions(table, path):
    table.frame.to_csv(path, index=False, lineterminator="\n")
