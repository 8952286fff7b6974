"""Readers, writers, and validation for the three tabular inputs.

All loaders are pure functions over immutable inputs: they return frozen
containers whose numpy payloads are marked read-only, so values can be
shared freely across threads.

File schemas (UTF-8 CSV with header row):
    flows.csv      from,to,count
    panel.csv      industry,region,year,emp_dom,emp_mne
    crosswalk.csv  source,target
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import CoverageError, ParseError, ValidationError

SOURCE = "SOURCE"
TARGET = "TARGET"

FLOWS_HEADER = ("from", "to", "count")
PANEL_HEADER = ("industry", "region", "year", "emp_dom", "emp_mne")
CROSSWALK_HEADER = ("source", "target")

PANEL_SORT_KEYS = ["region", "industry", "year"]


def _validate_codes(codes):
    if any(not c for c in codes):
        raise ValidationError("industry codes must be non-empty strings")
    if len(set(codes)) != len(codes):
        raise ValidationError("industry codes must be unique within a scheme")


@dataclass(frozen=True)
class FlowMatrix:
    """Square matrix of inter-industry worker-transition counts.

    ``codes`` keeps first-appearance order from the source file; ``counts``
    holds nonnegative reals with entry (i, j) = transitions from industry
    ``codes[i]`` to industry ``codes[j]``. The diagonal may be populated in
    input data but is ignored by every downstream computation.
    """

    codes: tuple
    counts: np.ndarray
    scheme: str = SOURCE

    def __post_init__(self):
        _validate_codes(self.codes)
        counts = np.asarray(self.counts, dtype=float)
        n = len(self.codes)
        if counts.shape != (n, n):
            raise ValidationError(
                f"counts shape {counts.shape} does not match {n} codes"
            )
        if np.any(counts < 0):
            raise ValidationError("flow counts must be nonnegative")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "codes", tuple(self.codes))

    @property
    def n(self):
        return len(self.codes)

    def index(self, code):
        return self.codes.index(code)

    def total(self):
        return float(self.counts.sum())


@dataclass(frozen=True)
class EmploymentPanel:
    """Industry-region-year employment records, split by ownership type.

    ``records`` is sorted by (region, industry, year). Combinations absent
    from the data mean zero employment, not missing data; presence
    labelling relies on that convention.
    """

    records: pd.DataFrame

    def __post_init__(self):
        df = self.records.reset_index(drop=True)
        expected = list(PANEL_HEADER)
        if list(df.columns) != expected:
            raise ValidationError(f"panel columns must be {expected}")
        if len(df):
            if df.duplicated(["industry", "region", "year"]).any():
                raise ValidationError(
                    "duplicate (industry, region, year) record in panel"
                )
            if (df["emp_dom"] < 0).any() or (df["emp_mne"] < 0).any():
                raise ValidationError("employment counts must be nonnegative")
            df = df.sort_values(PANEL_SORT_KEYS, kind="mergesort").reset_index(
                drop=True
            )
        object.__setattr__(self, "records", df)

    def __len__(self):
        return len(self.records)

    def years(self):
        """Contiguous year axis spanned by the data (min..max inclusive)."""
        if not len(self.records):
            return ()
        lo, hi = int(self.records["year"].min()), int(self.records["year"].max())
        return tuple(range(lo, hi + 1))

    def industries(self):
        return tuple(sorted(self.records["industry"].unique()))

    def regions(self):
        return tuple(sorted(self.records["region"].unique()))


@dataclass(frozen=True)
class Crosswalk:
    """Many-to-many correspondence between two classification schemes."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((str(s), str(t)) for s, t in self.pairs)
        if any(not s or not t for s, t in pairs):
            raise ValidationError("crosswalk codes must be non-empty")
        if len(set(pairs)) != len(pairs):
            raise ValidationError("duplicate crosswalk pair")
        object.__setattr__(self, "pairs", pairs)

    def targets_of(self, source):
        return tuple(t for s, t in self.pairs if s == source)

    def validate_coverage(self, codes):
        """Raise CoverageError naming any code without a target mapping."""
        covered = {s for s, _ in self.pairs}
        orphans = [c for c in codes if c not in covered]
        if orphans:
            raise CoverageError(orphans)


def _read_rows(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError(f"empty file, expected header {','.join(header)}", line=1)
        if [c.strip() for c in first] != list(header):
            raise ParseError(
                f"expected header {','.join(header)}, got {','.join(first)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}", line=lineno
                )
            yield lineno, row


def load_flows(path):
    """Read a flows CSV into a FlowMatrix.

    Codes are ordered by first appearance (scanning `from` then `to` per
    row); cells not present in the file default to 0. Self-flows are kept
    but flagged with a warning since downstream code ignores the diagonal.
    """
    codes = []
    seen = {}
    cells = {}
    for lineno, (src, dst, count) in _read_rows(path, FLOWS_HEADER):
        src, dst = src.strip(), dst.strip()
        if not src or not dst:
            raise ParseError("empty industry code", line=lineno)
        try:
            value = float(count)
        except ValueError:
            raise ParseError(f"count {count!r} is not a number", line=lineno)
        if not np.isfinite(value):
            raise ParseError(f"count {count!r} is not finite", line=lineno)
        if value < 0:
            raise ValidationError(
                f"line {lineno}: negative flow count {value} for ({src}, {dst})"
            )
        for code in (src, dst):
            if code not in seen:
                seen[code] = len(codes)
                codes.append(code)
        key = (src, dst)
        if key in cells:
            raise ValidationError(f"line {lineno}: duplicate flow cell ({src}, {dst})")
        if src == dst and value > 0:
            warnings.warn(
                f"self-flow {src}->{src} = {value} is ignored downstream",
                stacklevel=2,
            )
        cells[key] = value
    counts = np.zeros((len(codes), len(codes)))
    for (src, dst), value in cells.items():
        counts[seen[src], seen[dst]] = value
    return FlowMatrix(codes=tuple(codes), counts=counts)


def write_flows(flows, path):
    """Write a FlowMatrix as a dense flows CSV.

    Every cell is written (including zeros) in row-major order so that
    re-loading reproduces the code order and values exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FLOWS_HEADER)
        for i, src in enumerate(flows.codes):
            for j, dst in enumerate(flows.codes):
                writer.writerow([src, dst, repr(float(flows.counts[i, j]))])


def load_panel(path):
    """Read a panel CSV into an EmploymentPanel sorted by (region, industry, year)."""
    rows = []
    keys = set()
    for lineno, (industry, region, year, emp_dom, emp_mne) in _read_rows(
        path, PANEL_HEADER
    ):
        industry, region = industry.strip(), region.strip()
        if not industry or not region:
            raise ParseError("empty industry or region label", line=lineno)
        parsed = []
        for name, raw in (("year", year), ("emp_dom", emp_dom), ("emp_mne", emp_mne)):
            try:
                parsed.append(int(raw))
            except ValueError:
                raise ParseError(f"{name} {raw!r} is not an integer", line=lineno)
        year, emp_dom, emp_mne = parsed
        if emp_dom < 0 or emp_mne < 0:
            raise ValidationError(f"line {lineno}: negative employment")
        key = (industry, region, year)
        if key in keys:
            raise ValidationError(
                f"line {lineno}: duplicate panel record {key}"
            )
        keys.add(key)
        rows.append((industry, region, year, emp_dom, emp_mne))
    df = pd.DataFrame(rows, columns=list(PANEL_HEADER))
    if not len(rows):
        df = df.astype(
            {"industry": str, "region": str, "year": int, "emp_dom": int, "emp_mne": int}
        )
    return EmploymentPanel(records=df)


def write_panel(panel, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PANEL_HEADER)
        for row in panel.records.itertuples(index=False):
            writer.writerow(
                [row.industry, row.region, row.year, row.emp_dom, row.emp_mne]
            )


def load_crosswalk(path, flows=None):
    """Read a crosswalk CSV; duplicated pairs collapse to one.

    When ``flows`` is given, every code in the flow matrix must map to at
    least one target, otherwise a CoverageError names the orphans.
    """
    pairs = []
    seen = set()
    for lineno, (src, dst) in _read_rows(path, CROSSWALK_HEADER):
        src, dst = src.strip(), dst.strip()
        if not src or not dst:
            raise ParseError("empty code in crosswalk pair", line=lineno)
        pair = (src, dst)
        if pair in seen:
            continue
        seen.add(pair)
        pairs.append(pair)
    xwalk = Crosswalk(pairs=tuple(pairs))
    if flows is not None:
        xwalk.validate_coverage(flows.codes)
    return xwalk


def write_crosswalk(xwalk, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CROSSWALK_HEADER)
        for src, dst in xwalk.pairs:
            writer.writerow([src, dst])
