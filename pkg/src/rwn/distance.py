"""The pairwise distance used by every neighborhood backend and the privacy metrics.

Squared distance between records a and b is a weighted sum of per-column
contributions over the standardized view:

* numeric column: (z_a - z_b)^2
* categorical column: 0 if the codes match, else 1
* either cell missing: the column's mean contribution over complete pairs
  (a fixed per-column constant, so missing cells neither vanish from nor
  dominate the metric)

Everything here is a pure function of immutable inputs; callers count
distance evaluations themselves (see neighborhoods). The spec object
isolates the metric so an alternative could be swapped in without touching
the backends.

Distance is zero for identical complete records. The missing rule applies
to every pair, including a record against itself, so a record with a
missing cell sits at nonzero distance from everything -- missing never
counts as a match.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import StandardizedView
from .errors import ConfigError, SchemaError


@dataclass(frozen=True)
class DistanceSpec:
    """Standardized view plus per-column weights and missing-pair constants."""

    view: StandardizedView
    num_weights: np.ndarray
    cat_weights: np.ndarray
    num_fill: np.ndarray   # per numeric column: mean (z_a - z_b)^2 over complete pairs
    cat_fill: np.ndarray   # per categorical column: mean mismatch over complete pairs

    @property
    def n(self) -> int:
        return self.view.n


def make_spec(view: StandardizedView, weights: dict[str, float] | None = None) -> DistanceSpec:
    """Bind weights (column name -> nonnegative scalar, default 1) to a view."""
    weights = dict(weights or {})
    for name, w in weights.items():
        if name not in view.numeric_names and name not in view.categorical_names:
            raise SchemaError(f"weight for unknown column {name!r}")
        if not (w >= 0):
            raise ConfigError(f"weight for column {name!r} must be nonnegative")
    num_w = np.array([weights.get(name, 1.0) for name in view.numeric_names])
    cat_w = np.array([weights.get(name, 1.0) for name in view.categorical_names])
    return DistanceSpec(
        view=view,
        num_weights=num_w,
        cat_weights=cat_w,
        num_fill=_numeric_fill(view.values),
        cat_fill=_categorical_fill(view.codes, view.category_counts),
    )


def _numeric_fill(values: np.ndarray) -> np.ndarray:
    # Mean of (z_a - z_b)^2 over complete pairs equals twice the sample
    # variance of the complete values; columns with < 2 complete values
    # carry no information and fill with 0.
    out = np.zeros(values.shape[1])
    for c in range(values.shape[1]):
        col = values[~np.isnan(values[:, c]), c]
        if col.size >= 2:
            out[c] = 2.0 * float(col.std(ddof=1)) ** 2
    return out


def _categorical_fill(codes: np.ndarray, category_counts) -> np.ndarray:
    out = np.zeros(codes.shape[1])
    for c in range(codes.shape[1]):
        col = codes[codes[:, c] >= 0, c]
        m = col.size
        if m >= 2:
            counts = np.bincount(col)
            same = (counts * (counts - 1)).sum() / (m * (m - 1))
            out[c] = 1.0 - float(same)
    return out


def sq_distances_from(spec: DistanceSpec, i: int, targets: np.ndarray | slice) -> np.ndarray:
    """Squared distances from record i to each target record (vectorized)."""
    view = spec.view
    zi = view.values[i]
    z = view.values[targets]
    total = np.zeros(z.shape[0])
    for c in range(z.shape[1]):
        if spec.num_weights[c] == 0.0:
            continue
        d2 = (z[:, c] - zi[c]) ** 2
        d2 = np.where(np.isnan(d2), spec.num_fill[c], d2)
        total += spec.num_weights[c] * d2
    ci = view.codes[i]
    codes = view.codes[targets]
    for c in range(codes.shape[1]):
        if spec.cat_weights[c] == 0.0:
            continue
        col = codes[:, c]
        if ci[c] < 0:
            contrib = np.full(col.shape, spec.cat_fill[c])
        else:
            contrib = np.where(col < 0, spec.cat_fill[c], (col != ci[c]).astype(np.float64))
        total += spec.cat_weights[c] * contrib
    return total


def sq_distances_pairs(spec: DistanceSpec, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Squared distances for aligned index arrays (left[k] vs right[k])."""
    view = spec.view
    za, zb = view.values[left], view.values[right]
    total = np.zeros(len(left))
    for c in range(za.shape[1]):
        if spec.num_weights[c] == 0.0:
            continue
        d2 = (za[:, c] - zb[:, c]) ** 2
        d2 = np.where(np.isnan(d2), spec.num_fill[c], d2)
        total += spec.num_weights[c] * d2
    ca, cb = view.codes[left], view.codes[right]
    for c in range(ca.shape[1]):
        if spec.cat_weights[c] == 0.0:
            continue
        missing = (ca[:, c] < 0) | (cb[:, c] < 0)
        contrib = np.where(missing, spec.cat_fill[c], (ca[:, c] != cb[:, c]).astype(np.float64))
        total += spec.cat_weights[c] * contrib
    return total


def sq_distances_to_point(spec: DistanceSpec, z_point: np.ndarray, code_point: np.ndarray) -> np.ndarray:
    """Squared distances from an external standardized point to every record.

    The point must already be in this spec's coordinates (see
    StandardizedView.apply_to); missing entries use this spec's fill
    constants. Used by the nearest-neighbor classifier.
    """
    view = spec.view
    total = np.zeros(view.n)
    for c in range(view.values.shape[1]):
        if spec.num_weights[c] == 0.0:
            continue
        d2 = (view.values[:, c] - z_point[c]) ** 2
        d2 = np.where(np.isnan(d2), spec.num_fill[c], d2)
        total += spec.num_weights[c] * d2
    for c in range(view.codes.shape[1]):
        if spec.cat_weights[c] == 0.0:
            continue
        col = view.codes[:, c]
        if code_point[c] < 0:
            contrib = np.full(col.shape, spec.cat_fill[c])
        else:
            contrib = np.where(col < 0, spec.cat_fill[c], (col != code_point[c]).astype(np.float64))
        total += spec.cat_weights[c] * contrib
    return total


def distance(spec: DistanceSpec, i: int, j: int) -> float:
    """Distance between records i and j; symmetric, nonnegative, zero on self."""
    n = spec.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"record index out of range: ({i}, {j}) for n={n}")
    ii = np.array([i], dtype=np.int64)
    jj = np.array([j], dtype=np.int64)
    return float(np.sqrt(sq_distances_pairs(spec, ii, jj)[0]))


def paired_distances(spec_ref: DistanceSpec, view_other: StandardizedView) -> np.ndarray:
    """Row-aligned distances between spec_ref's records and another view's.

    The other view must be in spec_ref's coordinates; missing pairs use
    spec_ref's fill constants. Powers the released-row-to-origin privacy
    measure.
    """
    ref = spec_ref.view
    if view_other.n != ref.n:
        raise SchemaError("row count mismatch between paired datasets")
    total = np.zeros(ref.n)
    for c in range(ref.values.shape[1]):
        if spec_ref.num_weights[c] == 0.0:
            continue
        d2 = (ref.values[:, c] - view_other.values[:, c]) ** 2
        d2 = np.where(np.isnan(d2), spec_ref.num_fill[c], d2)
        total += spec_ref.num_weights[c] * d2
    for c in range(ref.codes.shape[1]):
        if spec_ref.cat_weights[c] == 0.0:
            continue
        a, b = ref.codes[:, c], view_other.codes[:, c]
        missing = (a < 0) | (b < 0)
        contrib = np.where(missing, spec_ref.cat_fill[c], (a != b).astype(np.float64))
        total += spec_ref.cat_weights[c] * contrib
    return np.sqrt(total)


def pairwise_count(run) -> int:
    """Exact number of distance evaluations behind a neighborhood build."""
    return int(run.distance_evaluations)
