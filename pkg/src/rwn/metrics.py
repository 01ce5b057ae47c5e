"""Utility and privacy measures over (original, released) dataset pairs.

Everything here is pure computation over immutable datasets; the
replication loops (classification study, limit check) draw from
per-replication keyed streams and parallelize over replication index
without changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .config import RwnConfig
from .dataset import CATEGORICAL, NUMERIC, Dataset, standardize
from .distance import make_spec, paired_distances, sq_distances_from
from .eigen import jacobi_eigh
from .engine import perturb
from .errors import ConfigError, DataValidationError, SchemaError
from .neighborhoods import build_exact_sweep, build_neighborhoods

#: Convention note echoed into evaluation reports.
DISTANCE_METRIC_NOTE = (
    "weighted Euclidean over z-scored numerics plus 0/1 categorical mismatch; "
    "missing cells contribute per-column mean pair terms"
)


def _json_safe(x):
    if isinstance(x, np.ndarray):
        return [_json_safe(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    return x


def _quartiles(values: np.ndarray) -> dict:
    v = values[np.isfinite(values)]
    if v.size == 0:
        return {"count": 0}
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {
        "count": int(v.size),
        "min": float(q[0]),
        "q1": float(q[1]),
        "median": float(q[2]),
        "q3": float(q[3]),
        "max": float(q[4]),
        "mean": float(v.mean()),
    }


def _require_same_schema(orig: Dataset, pert: Dataset) -> None:
    if orig.schema != pert.schema:
        raise SchemaError("paired datasets have different schemas")
    if orig.n != pert.n:
        raise DataValidationError(f"paired datasets have different row counts ({orig.n} vs {pert.n})")


def _numeric_matrix(d: Dataset) -> tuple[np.ndarray, list[str]]:
    names = [c.name for c in d.schema if c.kind == NUMERIC]
    cols = [d.column(n) for n in names]
    return (np.column_stack(cols) if cols else np.empty((d.n, 0))), names


# -- correlation -----------------------------------------------------------


@dataclass
class CorrelationReport:
    columns: list[str]
    original: np.ndarray      # pairwise-complete Pearson, NaN where undefined
    released: np.ndarray
    delta: np.ndarray
    sign_flips: int
    sign_kept_fraction: float
    mean_abs_delta: float
    undefined_pairs: int

    def to_dict(self) -> dict:
        return _json_safe(
            {
                "columns": self.columns,
                "original": self.original,
                "released": self.released,
                "delta": self.delta,
                "sign_flips": self.sign_flips,
                "sign_kept_fraction": self.sign_kept_fraction,
                "mean_abs_delta": self.mean_abs_delta,
                "undefined_pairs": self.undefined_pairs,
                "distance_metric": DISTANCE_METRIC_NOTE,
            }
        )


def _pairwise_complete_corr(M: np.ndarray) -> np.ndarray:
    p = M.shape[1]
    C = np.full((p, p), np.nan)
    np.fill_diagonal(C, 1.0)
    for a in range(p):
        for b in range(a + 1, p):
            mask = ~np.isnan(M[:, a]) & ~np.isnan(M[:, b])
            if mask.sum() < 2:
                continue
            x, y = M[mask, a], M[mask, b]
            sx, sy = x.std(), y.std()
            if sx == 0.0 or sy == 0.0:
                continue
            r = float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))
            C[a, b] = C[b, a] = min(1.0, max(-1.0, r))
    return C


def correlation_report(orig: Dataset, pert: Dataset) -> CorrelationReport:
    """Pairwise-complete Pearson matrices for both datasets plus their drift."""
    _require_same_schema(orig, pert)
    mo, names = _numeric_matrix(orig)
    mp, _ = _numeric_matrix(pert)
    co = _pairwise_complete_corr(mo)
    cp = _pairwise_complete_corr(mp)
    delta = cp - co
    iu = np.triu_indices(len(names), k=1)
    both = ~np.isnan(co[iu]) & ~np.isnan(cp[iu])
    flips = int(np.sum((co[iu][both] * cp[iu][both]) < 0))
    kept = float(np.mean((co[iu][both] * cp[iu][both]) > 0)) if both.any() else 1.0
    mean_abs = float(np.nanmean(np.abs(delta[iu]))) if both.any() else 0.0
    undefined = int(np.sum(~both))
    return CorrelationReport(
        columns=names,
        original=co,
        released=cp,
        delta=delta,
        sign_flips=flips,
        sign_kept_fraction=kept,
        mean_abs_delta=mean_abs,
        undefined_pairs=undefined,
    )


# -- regression ------------------------------------------------------------


@dataclass
class OlsFit:
    coef: np.ndarray          # intercept first
    se: np.ndarray
    cooks: np.ndarray         # NaN for rows left out (missing cells)
    sigma2: float
    n_used: int


@dataclass
class RegressionReport:
    response: str
    predictors: list[str]
    coef_names: list[str]
    original: OlsFit
    released: OlsFit

    def to_dict(self) -> dict:
        def fit(f: OlsFit) -> dict:
            return {
                "coef": f.coef,
                "se": f.se,
                "cooks_distance": f.cooks,
                "sigma2": f.sigma2,
                "n_used": f.n_used,
            }

        return _json_safe(
            {
                "response": self.response,
                "predictors": self.predictors,
                "coef_names": self.coef_names,
                "original": fit(self.original),
                "released": fit(self.released),
            }
        )


def ols_fit(d: Dataset, response: str, predictors: list[str]) -> OlsFit:
    """Least squares with intercept on complete rows; Cook's distance per row."""
    for name in [response, *predictors]:
        if d.schema[d.column_index(name)].kind != NUMERIC:
            raise SchemaError(f"regression column {name!r} is not numeric")
    y_all = d.column(response)
    X_cols = [d.column(nm) for nm in predictors]
    complete = ~np.isnan(y_all)
    for col in X_cols:
        complete &= ~np.isnan(col)
    n_used = int(complete.sum())
    p_design = len(predictors) + 1
    if n_used < len(predictors) + 2:
        raise DataValidationError(
            f"regression needs at least {len(predictors) + 2} complete rows, found {n_used}"
        )
    X = np.column_stack([np.ones(n_used)] + [c[complete] for c in X_cols])
    y = y_all[complete]
    if np.linalg.matrix_rank(X) < p_design:
        raise DataValidationError("rank-deficient design matrix")
    Q, R = np.linalg.qr(X)
    coef = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ coef
    h = np.sum(Q * Q, axis=1)
    dof = n_used - p_design
    sigma2 = float(resid @ resid / dof)
    # exact fits leave only float residue; treat as zero residual variance
    if sigma2 <= 1e-24 * (float(y @ y) / n_used + 1.0):
        sigma2 = 0.0
    Rinv = np.linalg.inv(R)
    cov_unscaled = Rinv @ Rinv.T
    se = np.sqrt(np.maximum(sigma2 * np.diag(cov_unscaled), 0.0))
    cooks_used = np.zeros(n_used)
    if sigma2 > 0:
        denom = np.maximum((1.0 - h), 1e-300) ** 2
        cooks_used = (resid**2 / (p_design * sigma2)) * (h / denom)
    cooks = np.full(d.n, np.nan)
    cooks[complete] = cooks_used
    return OlsFit(coef=coef, se=se, cooks=cooks, sigma2=sigma2, n_used=n_used)


def regression_report(orig: Dataset, pert: Dataset, response: str, predictors: list[str]) -> RegressionReport:
    """Coefficients, standard errors, and Cook's distances on both datasets."""
    _require_same_schema(orig, pert)
    return RegressionReport(
        response=response,
        predictors=list(predictors),
        coef_names=["intercept", *predictors],
        original=ols_fit(orig, response, predictors),
        released=ols_fit(pert, response, predictors),
    )


# -- privacy ---------------------------------------------------------------


@dataclass
class PrivacyReport:
    mahalanobis_original: np.ndarray
    mahalanobis_released: np.ndarray
    min_distance_original: np.ndarray
    min_distance_released: np.ndarray
    released_to_origin: np.ndarray
    identical_row_fraction: float
    pseudo_inverse_original: bool
    pseudo_inverse_released: bool

    def to_dict(self) -> dict:
        return _json_safe(
            {
                "mahalanobis_original": _quartiles(self.mahalanobis_original),
                "mahalanobis_released": _quartiles(self.mahalanobis_released),
                "min_distance_original": _quartiles(self.min_distance_original),
                "min_distance_released": _quartiles(self.min_distance_released),
                "released_to_origin": _quartiles(self.released_to_origin),
                "identical_row_fraction": self.identical_row_fraction,
                "pseudo_inverse_original": self.pseudo_inverse_original,
                "pseudo_inverse_released": self.pseudo_inverse_released,
                "distance_metric": DISTANCE_METRIC_NOTE,
            }
        )


def mahalanobis_distances(d: Dataset) -> tuple[np.ndarray, bool]:
    """Per-record distance from the dataset's own numeric centroid.

    Rows with missing numeric cells get NaN. Returns (distances, flag);
    the flag is True when a pseudo-inverse stood in for a singular or
    under-determined covariance.
    """
    M, names = _numeric_matrix(d)
    n, p = M.shape
    out = np.full(n, np.nan)
    if p == 0:
        return out, False
    complete = ~np.isnan(M).any(axis=1)
    m = int(complete.sum())
    if m < 2:
        return out, True
    X = M[complete]
    mu = X.mean(axis=0)
    cov = np.cov(X, rowvar=False, ddof=1).reshape(p, p)
    flagged = m < p + 1
    try:
        if flagged:
            raise np.linalg.LinAlgError
        inv = np.linalg.inv(cov)
        if not np.isfinite(inv).all():
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        inv = np.linalg.pinv(cov)
        flagged = True
    centered = X - mu
    d2 = np.einsum("ij,jk,ik->i", centered, inv, centered)
    out[complete] = np.sqrt(np.maximum(d2, 0.0))
    return out, flagged


def _min_distances(spec) -> np.ndarray:
    n = spec.n
    out = np.full(n, np.nan)
    for i in range(n):
        d2 = sq_distances_from(spec, i, slice(None))
        d2[i] = np.inf
        out[i] = math.sqrt(float(d2.min()))
    return out


def _identical_fraction(orig: Dataset, pert: Dataset) -> float:
    same = np.ones(orig.n, dtype=bool)
    for spec, a, b in zip(orig.schema, orig.columns, pert.columns):
        if spec.kind == NUMERIC:
            same &= (a == b) | (np.isnan(a) & np.isnan(b))
        else:
            same &= a == b
    return float(same.mean())


def privacy_report(orig: Dataset, pert: Dataset, weights: dict[str, float] | None = None) -> PrivacyReport:
    """Outlier exposure (Mahalanobis), inlier exposure (min distance), linkage.

    Min-distance profiles for both datasets are computed in the original
    dataset's standardization so the before/after box summaries share units.
    """
    _require_same_schema(orig, pert)
    maha_o, flag_o = mahalanobis_distances(orig)
    maha_p, flag_p = mahalanobis_distances(pert)
    view_o = standardize(orig)
    spec_o = make_spec(view_o, weights)
    view_p = view_o.apply_to(pert)
    spec_p = make_spec(view_p, weights)
    return PrivacyReport(
        mahalanobis_original=maha_o,
        mahalanobis_released=maha_p,
        min_distance_original=_min_distances(spec_o),
        min_distance_released=_min_distances(spec_p),
        released_to_origin=paired_distances(spec_o, view_p),
        identical_row_fraction=_identical_fraction(orig, pert),
        pseudo_inverse_original=flag_o,
        pseudo_inverse_released=flag_p,
    )


# -- principal components ---------------------------------------------------


@dataclass
class PcaSide:
    sdev: np.ndarray
    proportion: np.ndarray


@dataclass
class PcaReport:
    columns: list[str]
    original: PcaSide
    released: PcaSide

    def to_dict(self) -> dict:
        return _json_safe(
            {
                "columns": self.columns,
                "original": {"sdev": self.original.sdev, "proportion": self.original.proportion},
                "released": {"sdev": self.released.sdev, "proportion": self.released.proportion},
            }
        )


def _pca_side(d: Dataset, columns: list[str]) -> PcaSide:
    M = np.column_stack([d.column(nm) for nm in columns])
    complete = ~np.isnan(M).any(axis=1)
    if complete.sum() < 2:
        raise DataValidationError("PCA needs at least 2 complete rows")
    X = M[complete]
    sd = X.std(axis=0, ddof=1)
    keep = sd > 0
    Z = (X[:, keep] - X[:, keep].mean(axis=0)) / sd[keep]
    corr = Z.T @ Z / (Z.shape[0] - 1)
    corr = (corr + corr.T) / 2.0
    values, _ = jacobi_eigh(corr)
    values = np.maximum(values, 0.0)
    total = values.sum()
    proportion = values / total if total > 0 else values
    return PcaSide(sdev=np.sqrt(values), proportion=proportion)


def pca_report(orig: Dataset, pert: Dataset) -> PcaReport:
    """Component standard deviations and variance proportions, both datasets.

    Constant numeric columns are excluded (they carry no correlation
    structure); the excluded set is determined by the original dataset so
    both sides decompose the same columns.
    """
    _require_same_schema(orig, pert)
    M, names = _numeric_matrix(orig)
    if not names:
        raise DataValidationError("PCA needs numeric columns")
    complete = ~np.isnan(M).any(axis=1)
    if complete.sum() < 2:
        raise DataValidationError("PCA needs at least 2 complete rows")
    sd = M[complete].std(axis=0, ddof=1)
    columns = [nm for nm, s in zip(names, sd) if s > 0]
    if not columns:
        raise DataValidationError("PCA needs at least one non-constant column")
    return PcaReport(columns=columns, original=_pca_side(orig, columns), released=_pca_side(pert, columns))


# -- classification study ----------------------------------------------------


@dataclass
class StudyRow:
    name: str
    config: dict | None
    rates: list[float]
    mean_rate: float


@dataclass
class StudyReport:
    label: str
    holdout: int
    replications: int
    discarded_splits: int
    rows: list[StudyRow]

    def to_dict(self) -> dict:
        return _json_safe(
            {
                "label": self.label,
                "holdout": self.holdout,
                "replications": self.replications,
                "discarded_splits": self.discarded_splits,
                "rows": [
                    {"name": r.name, "config": r.config, "rates": r.rates, "mean_rate": r.mean_rate}
                    for r in self.rows
                ],
            }
        )


def _drop_column(d: Dataset, name: str) -> Dataset:
    j = d.column_index(name)
    schema = tuple(c for i, c in enumerate(d.schema) if i != j)
    columns = [c for i, c in enumerate(d.columns) if i != j]
    return Dataset(schema, columns)


def classification_study(
    d: Dataset,
    label: str,
    configs: list[RwnConfig],
    predictor=None,
    holdout: int = 200,
    replications: int = 25,
    seed: int = 0,
    workers: int | None = None,
) -> StudyReport:
    """Train on perturbed rows, score on untouched holdouts, per config.

    Each replication draws a fresh train/holdout split from its own keyed
    stream; splits missing a label class are discarded, counted, and
    redrawn. The baseline row trains on the unperturbed training split with
    the same predictor (default: 25-nearest-neighbor majority vote).
    """
    from sklearn.base import clone

    from .estimator import NearestNeighborClassifier
    from .parallel import map_chunks

    lbl_idx = d.column_index(label)
    if d.schema[lbl_idx].kind != CATEGORICAL:
        raise SchemaError(f"label column {label!r} must be categorical")
    if not (0 < holdout < d.n):
        raise ConfigError(f"holdout must be in (0, n={d.n}), got {holdout}")
    for cfg in configs:
        cfg.validate()
    if predictor is None:
        predictor = NearestNeighborClassifier(k=25)

    label_codes = d.columns[lbl_idx]
    classes = np.unique(label_codes[label_codes >= 0])
    n = d.n
    discarded = [0] * replications
    rates = np.zeros((len(configs) + 1, replications))

    def run_reps(start: int, stop: int) -> None:
        for rep in range(start, stop):
            for attempt in range(1000):
                perm = rng.stream(seed, rng.SPLIT, rep, attempt).permutation(n)
                test_idx, train_idx = perm[:holdout], perm[holdout:]
                train_lbl = label_codes[train_idx]
                if np.isin(classes, train_lbl).all():
                    break
                discarded[rep] += 1
            else:
                raise DataValidationError("could not draw a training split containing every class")

            test_feat = _drop_column(d.subset(test_idx), label)
            y_test = label_codes[test_idx]
            train_ds = d.subset(train_idx)

            def fit_rate(train_data: Dataset) -> float:
                lbl = train_data.columns[train_data.column_index(label)]
                keep = np.flatnonzero(lbl >= 0)
                kept = train_data.subset(keep)
                clf = clone(predictor)
                clf.fit(_drop_column(kept, label), lbl[keep])
                pred = clf.predict(test_feat)
                return float(np.mean(pred != y_test))

            rates[0, rep] = fit_rate(train_ds)
            view = standardize(train_ds)
            for gi, cfg in enumerate(configs):
                rep_cfg = replace(cfg, seed=rng.derive_seed(cfg.seed, rng.STUDY, rep))
                spec = make_spec(view, rep_cfg.weights)
                ns = build_neighborhoods(spec, rep_cfg)
                out = perturb(train_ds, ns, rep_cfg)
                rates[gi + 1, rep] = fit_rate(out.data)

    map_chunks(replications, run_reps, workers, min_chunk=1)

    rows = [
        StudyRow(
            name="baseline",
            config=None,
            rates=[float(r) for r in rates[0]],
            mean_rate=float(rates[0].mean()),
        )
    ]
    for gi, cfg in enumerate(configs):
        rows.append(
            StudyRow(
                name=f"config_{gi}",
                config=cfg.to_dict(),
                rates=[float(r) for r in rates[gi + 1]],
                mean_rate=float(rates[gi + 1].mean()),
            )
        )
    return StudyReport(
        label=label,
        holdout=holdout,
        replications=replications,
        discarded_splits=sum(discarded),
        rows=rows,
    )


# -- small-neighborhood limit check -------------------------------------------


@dataclass
class LimitCheckConfig:
    """Settings for the joint-distribution limit check on synthetic data.

    Generates correlated bivariate normals, perturbs with q=1 over a
    decreasing eps schedule (k as a small floor), and compares joint
    empirical CDFs of released vs original data on a quantile grid.
    """

    rho: float = 0.7
    sample_size: int = 5000
    eps_schedule: tuple[float, ...] = (1.0, 0.5, 0.25, 0.1)
    replications: int = 25
    k: int = 3
    grid: int = 10
    tolerance: float = 0.03
    seed: int = 0

    def validate(self) -> "LimitCheckConfig":
        if not (-1.0 < self.rho < 1.0):
            raise ConfigError(f"need |rho| < 1, got {self.rho}")
        if self.sample_size < 100:
            raise ConfigError(f"sample size must be >= 100, got {self.sample_size}")
        if len(self.eps_schedule) < 3:
            raise ConfigError("eps schedule too coarse: need at least 3 values")
        if any(e <= 0 for e in self.eps_schedule):
            raise ConfigError("eps schedule values must be positive")
        if self.grid < 2:
            raise ConfigError("grid must be >= 2")
        if self.replications < 1:
            raise ConfigError("need at least 1 replication")
        return self


@dataclass
class LimitCheckReport:
    eps: list[float]               # descending
    mean_gap: list[float]          # mean over replications, per eps
    mean_corr_error: list[float]   # mean |corr(released) - rho|, per eps
    final_gap: float
    trend_decreasing: bool
    passed: bool

    def to_dict(self) -> dict:
        return _json_safe(
            {
                "eps": self.eps,
                "mean_gap": self.mean_gap,
                "mean_corr_error": self.mean_corr_error,
                "final_gap": self.final_gap,
                "trend_decreasing": self.trend_decreasing,
                "passed": self.passed,
            }
        )


def joint_cdf_gap(reference: np.ndarray, other: np.ndarray, grid: int = 10) -> float:
    """Max |F_ref - F_other| over a grid x grid lattice of reference quantiles."""
    levels = (np.arange(grid) + 0.5) / grid
    ax = np.quantile(reference[:, 0], levels)
    ay = np.quantile(reference[:, 1], levels)

    def joint(data: np.ndarray) -> np.ndarray:
        ix = (data[:, 0][:, None] <= ax[None, :]).astype(np.float64)
        iy = (data[:, 1][:, None] <= ay[None, :]).astype(np.float64)
        return ix.T @ iy / data.shape[0]

    return float(np.abs(joint(reference) - joint(other)).max())


def limit_check(cfg: LimitCheckConfig, workers: int | None = None) -> LimitCheckReport:
    """Monte Carlo check that shrinking eps recovers the joint distribution.

    Passes when the mean CDF gap trends downward across the schedule and the
    smallest-eps gap is below tolerance.
    """
    from .parallel import map_chunks
    from .synth import bivariate_normal

    cfg.validate()
    eps_desc = sorted(set(float(e) for e in cfg.eps_schedule), reverse=True)
    n_eps = len(eps_desc)
    gaps = np.zeros((cfg.replications, n_eps))
    corr_err = np.zeros((cfg.replications, n_eps))

    def run_reps(start: int, stop: int) -> None:
        for rep in range(start, stop):
            data = bivariate_normal(cfg.sample_size, cfg.rho, rng.derive_seed(cfg.seed, rng.DATA, rep))
            ref = np.column_stack([data.columns[0], data.columns[1]])
            spec = make_spec(standardize(data))
            sweeps = build_exact_sweep(spec, eps_desc, cfg.k)
            for e, ns in enumerate(sweeps):
                run_cfg = RwnConfig(eps=eps_desc[e], k=cfg.k, q=1.0, seed=rng.derive_seed(cfg.seed, rep, e))
                out = perturb(data, ns, run_cfg)
                released = np.column_stack([out.data.columns[0], out.data.columns[1]])
                gaps[rep, e] = joint_cdf_gap(ref, released, cfg.grid)
                corr_err[rep, e] = abs(float(np.corrcoef(released[:, 0], released[:, 1])[0, 1]) - cfg.rho)

    map_chunks(cfg.replications, run_reps, workers, min_chunk=1)

    mean_gap = gaps.mean(axis=0)
    mean_ce = corr_err.mean(axis=0)
    final_gap = float(mean_gap[-1])
    trend = bool(mean_gap[-1] <= mean_gap[0])
    return LimitCheckReport(
        eps=eps_desc,
        mean_gap=[float(g) for g in mean_gap],
        mean_corr_error=[float(c) for c in mean_ce],
        final_gap=final_gap,
        trend_decreasing=trend,
        passed=trend and final_gap <= cfg.tolerance,
    )
