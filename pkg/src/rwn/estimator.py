"""Estimator-style front ends so the method composes with sklearn tooling.

RwnPerturber is fit/transform shaped: fit builds the neighborhoods over the
training data, transform releases the perturbed copy. It accepts a Dataset,
a 2-D numeric array (NaN = missing), a list of rows, or a DataFrame-like
object with .columns and .dtypes, and returns perturbed data of the same
kind it was given.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .config import RwnConfig
from .dataset import CATEGORICAL, NUMERIC, ColumnSchema, Dataset, standardize
from .distance import make_spec, sq_distances_to_point
from .engine import perturb
from .errors import DataValidationError
from .neighborhoods import build_neighborhoods


def as_dataset(X) -> Dataset:
    """Coerce estimator input to a Dataset."""
    if isinstance(X, Dataset):
        return X
    if hasattr(X, "columns") and hasattr(X, "dtypes"):
        return _from_dataframe(X)
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise DataValidationError(f"expected a 2-D array, got shape {arr.shape}")
    if arr.dtype == object:
        return _from_rows(arr)
    arr = arr.astype(np.float64)
    if np.isinf(arr).any():
        raise DataValidationError("non-finite value in input array")
    schema = tuple(ColumnSchema(f"x{j}", NUMERIC) for j in range(arr.shape[1]))
    return Dataset(schema, [arr[:, j] for j in range(arr.shape[1])])


def _from_dataframe(df) -> Dataset:
    schema = []
    columns = []
    for name in df.columns:
        col = df[name]
        if np.issubdtype(np.asarray(col).dtype, np.number):
            schema.append(ColumnSchema(str(name), NUMERIC))
            columns.append(np.asarray(col, dtype=np.float64))
        else:
            values = ["" if v is None else str(v) for v in col]
            cats = tuple(sorted(set(values)))
            schema.append(ColumnSchema(str(name), CATEGORICAL, cats))
            lookup = {c: i for i, c in enumerate(cats)}
            columns.append(np.array([lookup[v] for v in values], dtype=np.int64))
    return Dataset(tuple(schema), columns)


def _from_rows(arr: np.ndarray) -> Dataset:
    rows = [list(r) for r in arr]
    schema = []
    for j in range(arr.shape[1]):
        vals = [r[j] for r in rows if r[j] is not None]
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in vals):
            schema.append(ColumnSchema(f"x{j}", NUMERIC))
        else:
            cats = tuple(sorted({str(v) for v in vals}))
            schema.append(ColumnSchema(f"x{j}", CATEGORICAL, cats))
            for r in rows:
                if r[j] is not None:
                    r[j] = str(r[j])
    return Dataset.from_rows(tuple(schema), rows)


class RwnPerturber(BaseEstimator, TransformerMixin):
    """Randomized replacement within neighborhoods, as a transformer.

    fit(X) standardizes X and builds the per-record neighbor sets with the
    selected backend; transform(X) releases the perturbed copy of the same
    X (the method perturbs the data it was fit on). fit_transform is the
    one-call form.
    """

    def __init__(
        self,
        eps: float = 0.0,
        k: int = 0,
        q: float = 1.0,
        seed: int = 0,
        backend: str = "exact",
        m: int | None = None,
        u: int | None = None,
        fresh_pool_per_point: bool = False,
        inner: str = "exact",
        weights: dict[str, float] | None = None,
        workers: int | None = None,
    ):
        self.eps = eps
        self.k = k
        self.q = q
        self.seed = seed
        self.backend = backend
        self.m = m
        self.u = u
        self.fresh_pool_per_point = fresh_pool_per_point
        self.inner = inner
        self.weights = weights
        self.workers = workers

    def _config(self) -> RwnConfig:
        return RwnConfig(
            eps=self.eps,
            k=self.k,
            q=self.q,
            seed=self.seed,
            backend=self.backend,
            m=self.m,
            u=self.u,
            fresh_pool_per_point=self.fresh_pool_per_point,
            inner=self.inner,
            weights=self.weights,
        ).validate()

    def fit(self, X, y=None):
        cfg = self._config()
        d = as_dataset(X)
        self.dataset_ = d
        self.view_ = standardize(d)
        self.spec_ = make_spec(self.view_, cfg.weights)
        self.neighborhoods_ = build_neighborhoods(self.spec_, cfg, self.workers)
        self.n_features_in_ = d.p
        return self

    def transform(self, X):
        if not hasattr(self, "neighborhoods_"):
            raise DataValidationError("perturber is not fitted; call fit or fit_transform")
        d = as_dataset(X)
        if d != self.dataset_:
            raise DataValidationError(
                "transform input differs from the fitted data; the method perturbs the data it was fit on"
            )
        result = perturb(self.dataset_, self.neighborhoods_, self._config(), self.workers)
        self.modified_mask_ = result.modified
        self.nullified_ = result.nullified
        self.result_ = result
        if isinstance(X, Dataset):
            return result.data
        values = np.empty((d.n, d.p))
        for j, spec in enumerate(result.data.schema):
            col = result.data.columns[j]
            values[:, j] = col if spec.kind == NUMERIC else np.where(col < 0, np.nan, col)
        return values


class NearestNeighborClassifier(BaseEstimator):
    """Majority vote over the k nearest records in the mixed standardized metric.

    Neighbor ties at the cut break toward the smaller training row index;
    vote ties go to the tied class whose representative is nearest. Missing
    feature cells use the training spec's per-column fill constants.
    """

    def __init__(self, k: int = 25, weights: dict[str, float] | None = None):
        self.k = k
        self.weights = weights

    def fit(self, X, y):
        d = as_dataset(X)
        y = np.asarray(y)
        if len(y) != d.n:
            raise DataValidationError(f"{len(y)} labels for {d.n} rows")
        self.view_ = standardize(d)
        self.spec_ = make_spec(self.view_, self.weights)
        self.classes_, self.y_ = np.unique(y, return_inverse=True)
        return self

    def predict(self, X):
        if not hasattr(self, "spec_"):
            raise DataValidationError("classifier is not fitted")
        d = as_dataset(X)
        other = self.view_.apply_to(d)
        k = min(self.k, self.view_.n)
        out = np.empty(d.n, dtype=np.int64)
        for i in range(d.n):
            sq = sq_distances_to_point(self.spec_, other.values[i], other.codes[i])
            order = np.lexsort((np.arange(sq.size), sq))[:k]
            votes = np.bincount(self.y_[order], minlength=len(self.classes_))
            best = votes.max()
            tied = np.flatnonzero(votes == best)
            if tied.size == 1:
                out[i] = tied[0]
            else:
                # nearest neighbor belonging to a tied class decides
                for t in order:
                    if self.y_[t] in tied:
                        out[i] = self.y_[t]
                        break
        return self.classes_[out]
