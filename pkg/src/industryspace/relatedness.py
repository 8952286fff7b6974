"""Skill-relatedness network construction and scheme conversion.

The network is built from labor-flow counts: each directed flow is
compared against the volume expected under random mixing, the excess
ratio is symmetrized, squashed onto (-1, 1), and only positive values
(flows above the random baseline) are kept as edge weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import TARGET, FlowMatrix

EDGES_HEADER = ("from", "to", "weight")
NODES_HEADER = ("industry", "mne_share", "no_employment")


@dataclass(frozen=True)
class RelatednessNetwork:
    """Symmetric nonnegative-weight industry graph.

    Weights live in [0, 1) with a zero diagonal; every stored nonzero
    weight is strictly positive. Degrees are the plain row sums of the
    weight matrix.
    """

    codes: tuple
    weights: np.ndarray

    def __post_init__(self):
        codes = tuple(self.codes)
        w = np.asarray(self.weights, dtype=float)
        n = len(codes)
        if w.shape != (n, n):
            raise ValidationError(f"weights shape {w.shape} does not match {n} codes")
        if not np.array_equal(w, w.T):
            raise ValidationError("weight matrix must be exactly symmetric")
        if np.any(np.diag(w) != 0):
            raise ValidationError("weight matrix must have a zero diagonal")
        if np.any(w < 0) or np.any(w >= 1):
            raise ValidationError("weights must lie in [0, 1)")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "weights", w)

    @property
    def n(self):
        return len(self.codes)

    @property
    def degrees(self):
        """Sum of edge weights incident to each industry."""
        return self.weights.sum(axis=1)

    def index(self, code):
        return self.codes.index(code)


def build_relatedness(flows):
    """Construct the relatedness network from a flow matrix.

    For each ordered pair the observed share of industry i's out-flows
    going to j is divided by j's share of all flows (the random-mixing
    baseline). The two directed ratios are averaged and mapped through
    (s - 1) / (s + 1), which sends the random-baseline fixed point to 0;
    only strictly positive results are retained as edges.

    Industries with no out-flows produce all-zero ratio rows, so they end
    up as isolated (degree-0) nodes rather than propagating NaNs.
    """
    if flows.n < 2:
        raise ValidationError("need at least 2 industries to build a network")
    f = np.array(flows.counts)
    np.fill_diagonal(f, 0.0)
    total = f.sum()
    if total <= 0:
        raise ValidationError("degenerate input: all inter-industry flows are zero")

    row_sums = f.sum(axis=1)
    col_shares = f.sum(axis=0) / total
    out_shares = np.divide(
        f, row_sums[:, None], out=np.zeros_like(f), where=row_sums[:, None] > 0
    )
    ratio = np.divide(
        out_shares,
        col_shares[None, :],
        out=np.zeros_like(f),
        where=col_shares[None, :] > 0,
    )

    s = (ratio + ratio.T) / 2.0
    w = (s - 1.0) / (s + 1.0)
    w[w <= 0] = 0.0
    # Mirror the upper triangle so symmetry holds bit-for-bit.
    w = np.triu(w, k=1)
    w = w + w.T
    return RelatednessNetwork(codes=flows.codes, weights=w)


def convert_scheme(flows, xwalk):
    """Translate a flow matrix into the crosswalk's target scheme.

    Each source flow value is copied onto every (target-of-from,
    target-of-to) combination. When several source pairs land on the same
    target pair the maximum value wins, so no invented magnitudes appear
    and re-applying an identity crosswalk is a no-op.
    """
    xwalk.validate_coverage(flows.codes)
    targets = {code: xwalk.targets_of(code) for code in flows.codes}

    out_codes = []
    out_index = {}
    for src, dst in xwalk.pairs:
        if src in targets and dst not in out_index:
            out_index[dst] = len(out_codes)
            out_codes.append(dst)

    counts = np.zeros((len(out_codes), len(out_codes)))
    src_rows, src_cols = np.nonzero(flows.counts)
    for i, j in zip(src_rows, src_cols):
        value = flows.counts[i, j]
        for a in targets[flows.codes[i]]:
            ia = out_index[a]
            for c in targets[flows.codes[j]]:
                ic = out_index[c]
                if value > counts[ia, ic]:
                    counts[ia, ic] = value
    return FlowMatrix(codes=tuple(out_codes), counts=counts, scheme=TARGET)


def mne_employment_shares(net, panel, year):
    """Per-industry MNE employment share across all regions in one year.

    Returns (shares, no_employment) arrays aligned with ``net.codes``;
    industries without any employment that year get share 0 and are
    flagged.
    """
    years = panel.years()
    if year not in years:
        raise ValidationError(f"year {year} not present in panel ({years[:1]}..{years[-1:]})")
    sub = panel.records[panel.records["year"] == year]
    dom = sub.groupby("industry")["emp_dom"].sum()
    mne = sub.groupby("industry")["emp_mne"].sum()
    shares = np.zeros(net.n)
    missing = np.ones(net.n, dtype=bool)
    for k, code in enumerate(net.codes):
        d = int(dom.get(code, 0))
        m = int(mne.get(code, 0))
        if d + m > 0:
            shares[k] = m / (d + m)
            missing[k] = False
    return shares, missing


def export_network(net, panel, year, edges_path, nodes_path):
    """Write edge and node CSVs for external network rendering.

    Each undirected edge appears once with from < to lexicographically;
    nodes carry the industry's MNE employment share in the given year.
    """
    shares, missing = mne_employment_shares(net, panel, year)
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EDGES_HEADER)
        order = sorted(range(net.n), key=lambda k: net.codes[k])
        for a_pos, a in enumerate(order):
            for b in order[a_pos + 1 :]:
                w = net.weights[a, b]
                if w > 0:
                    writer.writerow([net.codes[a], net.codes[b], f"{w:.12g}"])
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(NODES_HEADER)
        for k in sorted(range(net.n), key=lambda k: net.codes[k]):
            writer.writerow(
                [net.codes[k], f"{shares[k]:.12g}", int(missing[k])]
            )
