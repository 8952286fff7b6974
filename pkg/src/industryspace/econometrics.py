"""Fixed-effects panel probit estimation for entry and exit models.

Fixed effects enter as dummy columns (one reference level dropped per
factor). Groups whose outcome is constant predict perfectly and would
push their dummy coefficient to infinity, so they are removed together
with their observations before fitting and reported in
``n_dropped_separation``; the remaining coefficients' maximum likelihood
estimates are unaffected by the removal.

Standard errors are Huber-White sandwich estimates (optionally clustered
by region), and fit quality is summarized by the Mann-Whitney AUC of the
fitted probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import log_ndtr, ndtr
from scipy.stats import rankdata

from .errors import EstimationError, ValidationError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

COHESION_TERMS = (
    "wc_excl_d",
    "wc_excl_m",
    "wc_overlap",
    "sc_excl_d",
    "sc_excl_m",
    "sc_overlap",
)

RESULTS_HEADER = (
    "outcome",
    "period",
    "family",
    "column",
    "term",
    "estimate",
    "robust_se",
    "z",
    "p_value",
    "stars",
    "auc",
    "n_obs",
    "n_dropped_separation",
    "converged",
    "error",
)


@dataclass(frozen=True)
class RegressionSpec:
    """One model column: outcome, period, and the covariates to include."""

    outcome: str
    period: object  # PeriodSpec
    cohesion_terms: tuple = ()
    include_mne_presence: bool = True
    fe_industry: bool = True
    fe_region: bool = True

    def __post_init__(self):
        if self.outcome not in ("entry", "exit"):
            raise ValidationError(f"outcome must be entry or exit, got {self.outcome!r}")
        object.__setattr__(self, "cohesion_terms", tuple(self.cohesion_terms))
        if not self.cohesion_terms and not self.include_mne_presence:
            raise ValidationError(
                "spec needs at least one cohesion term or the MNE-presence control"
            )
        for term in self.cohesion_terms:
            if term not in COHESION_TERMS:
                raise ValidationError(f"unknown cohesion term {term!r}")


@dataclass
class Design:
    """Design matrix plus the factor labels needed for separation pruning."""

    matrix: np.ndarray
    outcome: np.ndarray
    columns: list
    base_columns: list
    fe_factors: dict = field(default_factory=dict)
    row_meta: pd.DataFrame = None

    @property
    def n_rows(self):
        return self.matrix.shape[0]

    def base_matrix(self):
        return self.matrix[:, : len(self.base_columns)]


@dataclass
class RegressionResult:
    coefficients: dict
    robust_se: dict
    z_stats: dict
    p_values: dict
    auc: float
    n_obs: int
    n_dropped_separation: int
    converged: bool
    log_likelihood: float
    n_iter: int
    columns: list


def merge_panel(table, cohesion, cube):
    """Join transition labels with cohesion values and the MNE control.

    One row per (industry, region, period) present in both tables; the
    MNE-presence control is read off the cube at each period's base year.
    """
    frame = table.frame.merge(
        cohesion,
        on=["industry", "region", "period"],
        how="inner",
        validate="one_to_one",
    )
    base_idx = {spec.name: cube.year_index(spec.base_year) for spec in table.periods}
    ind_idx = {c: k for k, c in enumerate(cube.industries)}
    reg_idx = {r: k for k, r in enumerate(cube.regions)}
    mne = [
        int(cube.mne[ind_idx[row.industry], reg_idx[row.region], base_idx[row.period]])
        for row in frame.itertuples(index=False)
    ]
    frame = frame.copy()
    frame["mne_present"] = mne
    return frame


def build_design(table, cohesion, cube, spec):
    """Assemble the design matrix for one regression specification.

    Rows are restricted to the spec's estimation sample (industries absent
    at base for entry models, present at base for exit models). Columns:
    intercept, the requested cohesion terms at the period base year, the
    MNE-presence control, then fixed-effect dummies with the
    lexicographically first level as reference.
    """
    merged = merge_panel(table, cohesion, cube)
    sample_col = "in_entry_sample" if spec.outcome == "entry" else "in_exit_sample"
    sub = merged[(merged["period"] == spec.period.name) & (merged[sample_col] == 1)]
    if not len(sub):
        raise EstimationError(
            f"empty sample for {spec.outcome} model in period {spec.period.name!r}"
        )
    sub = sub.reset_index(drop=True)

    base_columns = ["const"] + list(spec.cohesion_terms)
    cols = [np.ones(len(sub))]
    cols += [sub[t].to_numpy(dtype=float) for t in spec.cohesion_terms]
    if spec.include_mne_presence:
        base_columns.append("mne_present")
        cols.append(sub["mne_present"].to_numpy(dtype=float))

    fe_factors = {}
    if spec.fe_industry:
        fe_factors["industry"] = sub["industry"].to_numpy()
    if spec.fe_region:
        fe_factors["region"] = sub["region"].to_numpy()

    y = sub[spec.outcome].to_numpy(dtype=float)
    meta = sub[["industry", "region", "period"]]
    matrix, columns = _materialize(np.column_stack(cols), base_columns, fe_factors)
    return Design(
        matrix=matrix,
        outcome=y,
        columns=columns,
        base_columns=base_columns,
        fe_factors=fe_factors,
        row_meta=meta,
    )


def _materialize(base, base_columns, fe_factors):
    """Full design matrix: base columns then FE dummies (first level dropped)."""
    cols = [base[:, k] for k in range(base.shape[1])]
    names = list(base_columns)
    for factor in sorted(fe_factors):
        labels = fe_factors[factor]
        levels = sorted(set(labels))
        for level in levels[1:]:
            cols.append((labels == level).astype(float))
            names.append(f"{factor}[{level}]")
    return np.column_stack(cols), names


def prune_separated_groups(design):
    """Drop FE groups with constant outcome; return (pruned design, n dropped).

    Removal iterates to a fixed point because dropping one factor's rows
    can make another factor's group constant. Dummies are rebuilt on the
    retained rows so every remaining level keeps both outcome classes.
    """
    y = design.outcome
    keep = np.ones(len(y), dtype=bool)
    changed = True
    while changed:
        changed = False
        for labels in design.fe_factors.values():
            for level in pd.unique(labels[keep]):
                idx = keep & (labels == level)
                vals = y[idx]
                if len(vals) and vals.min() == vals.max():
                    keep[idx] = False
                    changed = True
    n_dropped = int((~keep).sum())
    if n_dropped == 0:
        return design, 0
    base = design.base_matrix()[keep]
    fe = {name: labels[keep] for name, labels in design.fe_factors.items()}
    matrix, columns = _materialize(base, design.base_columns, fe)
    pruned = Design(
        matrix=matrix,
        outcome=y[keep],
        columns=columns,
        base_columns=list(design.base_columns),
        fe_factors=fe,
        row_meta=None if design.row_meta is None else design.row_meta[keep],
    )
    return pruned, n_dropped


def _check_rank(matrix, columns):
    from scipy.linalg import qr

    _, r, piv = qr(matrix, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(matrix.shape) * np.finfo(float).eps * (diag[0] if len(diag) else 0.0)
    rank = int((diag > tol).sum())
    if rank < matrix.shape[1]:
        bad = sorted(columns[k] for k in piv[rank:])
        raise EstimationError("design is rank deficient; collinear columns: " + ", ".join(bad))


def _check_binary_separation(design):
    """Reject binary non-FE covariates with a perfectly predicted level.

    If the outcome is constant on either level of a 0/1 control, the
    probit MLE for that coefficient diverges (quasi-complete separation),
    so the model cannot be estimated as specified.
    """
    y = design.outcome
    base = design.base_matrix()
    for k, name in enumerate(design.base_columns):
        if name == "const":
            continue
        col = base[:, k]
        values = np.unique(col)
        if not np.all(np.isin(values, (0.0, 1.0))) or len(values) < 2:
            continue
        for level in (0.0, 1.0):
            vals = y[col == level]
            if len(vals) and vals.min() == vals.max():
                raise EstimationError(
                    f"perfect separation in column {name!r} (outcome constant "
                    f"where {name} == {int(level)})"
                )


def probit_loglik(matrix, outcome, beta):
    eta = matrix @ beta
    return float(np.sum(outcome * log_ndtr(eta) + (1.0 - outcome) * log_ndtr(-eta)))


def _residual(eta, outcome):
    """Generalized probit residual: d loglik / d eta per observation."""
    log_pdf = -0.5 * eta**2 - _LOG_SQRT_2PI
    return np.where(
        outcome > 0,
        np.exp(log_pdf - log_ndtr(eta)),
        -np.exp(log_pdf - log_ndtr(-eta)),
    )


def probit_score(matrix, outcome, beta):
    """Analytic gradient of the probit log-likelihood."""
    return matrix.T @ _residual(matrix @ beta, outcome)


def _information(matrix, eta, lam):
    weights = lam * (lam + eta)
    return matrix.T @ (matrix * weights[:, None])


@dataclass
class ProbitFit:
    beta: np.ndarray
    log_likelihood: float
    converged: bool
    n_iter: int
    ll_path: list


def newton_probit(matrix, outcome, tol_score=1e-8, tol_ll=1e-10, max_iter=100):
    """Maximize the probit log-likelihood by Newton-Raphson.

    Steps use the analytic gradient and observed information; step
    halving guarantees the log-likelihood never decreases. Stops when the
    largest score entry falls below ``tol_score`` or the relative
    log-likelihood change falls below ``tol_ll``.
    """
    n, k = matrix.shape
    beta = np.zeros(k)
    eta = matrix @ beta
    ll = probit_loglik(matrix, outcome, beta)
    path = [ll]
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        lam = _residual(eta, outcome)
        score = matrix.T @ lam
        if np.max(np.abs(score)) < tol_score:
            converged = True
            n_iter -= 1
            break
        info = _information(matrix, eta, lam)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(info, score, rcond=None)
        if not np.all(np.isfinite(step)):
            break
        scale = 1.0
        improved = False
        for _ in range(40):
            cand = beta + scale * step
            cand_ll = probit_loglik(matrix, outcome, cand)
            if np.isfinite(cand_ll) and cand_ll >= ll:
                improved = True
                break
            scale /= 2.0
        if not improved:
            break
        prev_ll = ll
        beta, ll = cand, cand_ll
        eta = matrix @ beta
        path.append(ll)
        if abs(ll - prev_ll) <= tol_ll * max(1.0, abs(prev_ll)):
            converged = True
            break
    return ProbitFit(
        beta=beta, log_likelihood=ll, converged=converged, n_iter=n_iter, ll_path=path
    )


def robust_se_values(matrix, outcome, beta, cluster=None):
    """Huber-White sandwich standard errors at the fitted coefficients.

    The bread is the inverse observed information; the meat sums outer
    products of per-observation scores, or of per-cluster score sums when
    ``cluster`` labels are given.
    """
    eta = matrix @ beta
    lam = _residual(eta, outcome)
    scores = matrix * lam[:, None]
    info = _information(matrix, eta, lam)
    if cluster is not None:
        cluster = np.asarray(cluster)
        scores = pd.DataFrame(scores).groupby(cluster, sort=False).sum().to_numpy()
    # cov = H^-1 S' S H^-1 = (H^-1 S')(H^-1 S')', a Gram matrix, so the
    # diagonal stays nonnegative even when H is badly conditioned
    try:
        half = np.linalg.solve(info, scores.T)
    except np.linalg.LinAlgError:
        raise EstimationError("observed information matrix is singular")
    if not np.all(np.isfinite(half)):
        raise EstimationError("observed information matrix is singular")
    return np.sqrt(np.einsum("ij,ij->i", half, half))


def auc(scores, outcome):
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Equals the probability that a random positive outscores a random
    negative, counting ties as one half.
    """
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(outcome)
    pos = scores[y == 1]
    neg = scores[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise EstimationError("AUC undefined: outcome contains a single class")
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[: len(pos)].sum() - len(pos) * (len(pos) + 1) / 2.0
    return float(u / (len(pos) * len(neg)))


def fit_probit(design, outcome=None, cluster_by_region=False):
    """Estimate one probit model end to end.

    Prunes perfectly predicted fixed-effect groups, validates rank and
    binary-covariate separation, runs Newton-Raphson, then attaches
    sandwich standard errors, two-sided p-values, and the AUC of the
    fitted probabilities. Non-convergence is reported in the result, not
    raised.
    """
    if outcome is not None:
        design = Design(
            matrix=design.matrix,
            outcome=np.asarray(outcome, dtype=float),
            columns=list(design.columns),
            base_columns=list(design.base_columns),
            fe_factors=design.fe_factors,
            row_meta=design.row_meta,
        )
    y = np.asarray(design.outcome, dtype=float)
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValidationError("outcome must be binary 0/1")

    pruned, n_dropped = prune_separated_groups(design)
    y = pruned.outcome
    if len(y) == 0 or y.min() == y.max():
        raise EstimationError(
            "outcome is single-class after dropping separated fixed-effect groups"
        )
    _check_rank(pruned.matrix, pruned.columns)
    _check_binary_separation(pruned)

    fit = newton_probit(pruned.matrix, y)
    cluster = None
    if cluster_by_region:
        if pruned.row_meta is None or "region" not in pruned.row_meta:
            raise ValidationError("design carries no region labels to cluster on")
        cluster = pruned.row_meta["region"].to_numpy()
    try:
        se = robust_se_values(pruned.matrix, y, fit.beta, cluster=cluster)
    except EstimationError:
        if fit.converged:
            raise
        se = np.full(len(fit.beta), np.nan)

    z = np.divide(fit.beta, se, out=np.full_like(fit.beta, np.nan), where=se > 0)
    p = 2.0 * ndtr(-np.abs(z))
    fitted = ndtr(pruned.matrix @ fit.beta)
    names = pruned.columns
    return RegressionResult(
        coefficients=dict(zip(names, fit.beta.tolist())),
        robust_se=dict(zip(names, se.tolist())),
        z_stats=dict(zip(names, z.tolist())),
        p_values=dict(zip(names, p.tolist())),
        auc=auc(fitted, y),
        n_obs=len(y),
        n_dropped_separation=n_dropped,
        converged=fit.converged,
        log_likelihood=fit.log_likelihood,
        n_iter=fit.n_iter,
        columns=names,
    )


def significance_stars(p_value):
    if not np.isfinite(p_value):
        return ""
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.1:
        return "*"
    return ""


_GRID_PARTITION_ORDER = ("excl_d", "excl_m", "overlap")


def _family_terms(family, partition):
    if family == "wc":
        return (f"wc_{partition}",)
    if family == "sc":
        return (f"sc_{partition}",)
    if family == "combined":
        return (f"wc_{partition}", f"sc_{partition}")
    raise ValidationError(f"unknown measure family {family!r}")


def grid_columns(family):
    """The five model columns of one results table.

    (1) is the MNE-presence baseline, (2)-(4) add one partition's cohesion
    term(s), (5) includes all of them together.
    """
    cols = {1: ()}
    for k, partition in enumerate(_GRID_PARTITION_ORDER, start=2):
        cols[k] = _family_terms(family, partition)
    cols[5] = tuple(
        t for partition in _GRID_PARTITION_ORDER for t in _family_terms(family, partition)
    )
    return cols


def run_specification_grid(
    table,
    cohesion,
    cube,
    families=("wc", "sc", "combined"),
    outcomes=("entry", "exit"),
    cluster_by_region=False,
):
    """Fit every (outcome, period, family, column) cell and tabulate results.

    Failures of individual cells (empty samples, separation, collinearity)
    are recorded in the ``error`` column instead of aborting the grid.
    Fixed-effect dummy coefficients are omitted from the table; every
    model includes industry and region fixed effects.
    """
    rows = []
    for outcome in outcomes:
        for period in table.periods:
            for family in families:
                for column, terms in grid_columns(family).items():
                    spec = RegressionSpec(
                        outcome=outcome,
                        period=period,
                        cohesion_terms=terms,
                        include_mne_presence=True,
                    )
                    try:
                        design = build_design(table, cohesion, cube, spec)
                        result = fit_probit(design, cluster_by_region=cluster_by_region)
                    except (EstimationError, ValidationError) as exc:
                        rows.append(
                            {
                                "outcome": outcome,
                                "period": period.name,
                                "family": family,
                                "column": column,
                                "term": "",
                                "estimate": np.nan,
                                "robust_se": np.nan,
                                "z": np.nan,
                                "p_value": np.nan,
                                "stars": "",
                                "auc": np.nan,
                                "n_obs": 0,
                                "n_dropped_separation": 0,
                                "converged": False,
                                "error": str(exc),
                            }
                        )
                        continue
                    for term in design.base_columns:
                        if term not in result.coefficients:
                            continue
                        p_value = result.p_values[term]
                        rows.append(
                            {
                                "outcome": outcome,
                                "period": period.name,
                                "family": family,
                                "column": column,
                                "term": term,
                                "estimate": result.coefficients[term],
                                "robust_se": result.robust_se[term],
                                "z": result.z_stats[term],
                                "p_value": p_value,
                                "stars": significance_stars(p_value),
                                "auc": result.auc,
                                "n_obs": result.n_obs,
                                "n_dropped_separation": result.n_dropped_separation,
                                "converged": result.converged,
                                "error": "",
                            }
                        )
    return pd.DataFrame(rows, columns=list(RESULTS_HEADER))


def write_results(frame, path):
    frame.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
