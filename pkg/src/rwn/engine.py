"""The perturbation step: per-cell randomized replacement within neighborhoods.

For each record i with a nonempty neighbor set, every cell (i, j) keeps its
value with probability 1-q and otherwise takes column j's value from a
uniformly chosen neighbor, the donor drawn fresh and independently for each
column (donors may repeat across columns by chance). Records with empty
neighbor sets are released with every cell missing whenever q > 0: such
records are the most identifiable and must never ship verbatim, regardless
of how their coins land. q = 0 disables perturbation entirely and returns
the input bit-exactly.

The q-coin and the donor index for cell (i, j) come from disjoint
counter-based substreams keyed by (seed, i, j), so output is bit-identical
for any execution order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .config import RwnConfig
from .dataset import CATEGORICAL, NUMERIC, Dataset
from .errors import DataValidationError
from .neighborhoods import NeighborhoodSet

__all__ = ["RwnConfig", "PerturbedDataset", "perturb", "provenance_check", "donor_positions"]


@dataclass
class PerturbedDataset:
    """Released data plus the exact modification bookkeeping.

    modified[i, j] is True where the q-coin came up heads for a record with
    neighbors (the drawn value can coincide with the original). nullified[i]
    is True where the record had no neighbors and was released all-missing.
    """

    data: Dataset
    modified: np.ndarray
    nullified: np.ndarray

    @property
    def modified_cells(self) -> int:
        return int(self.modified.sum())

    @property
    def nullified_records(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.nullified)]


def donor_positions(seed: int, n: int, p: int, sizes: np.ndarray) -> np.ndarray:
    """Donor index within S_i for every cell: floor(u(seed, i, j) * |S_i|).

    Rows with empty neighbor sets get -1 (never used).
    """
    donor_u = rng.cell_uniforms(seed, n, p, rng.DONOR)
    pos = (donor_u * sizes[:, None]).astype(np.int64)
    return np.minimum(pos, (sizes - 1)[:, None])


def perturb(d: Dataset, ns: NeighborhoodSet, cfg: RwnConfig, workers: int | None = None) -> PerturbedDataset:
    """Apply randomized replacement to every record of d under cfg.

    The workers argument is accepted for interface symmetry; the engine is
    vectorized and its output never depends on worker count.
    """
    cfg.validate()
    if ns.n != d.n:
        raise DataValidationError(f"neighborhoods built for n={ns.n}, dataset has n={d.n}")

    n, p = d.n, d.p
    sizes = ns.sizes
    has_neighbors = sizes > 0

    coins = rng.cell_uniforms(cfg.seed, n, p, rng.COIN) < cfg.q
    modified = coins & has_neighbors[:, None]
    nullified = ~has_neighbors if cfg.q > 0 else np.zeros(n, dtype=bool)

    # donor row per cell: S_i[floor(u * |S_i|)], independent per column
    flat = np.concatenate(ns.neighbors) if any(s.size for s in ns.neighbors) else np.empty(0, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    donor_row = np.zeros((n, p), dtype=np.int64)
    if flat.size:
        pos = donor_positions(cfg.seed, n, p, sizes)
        donor_row[has_neighbors] = flat[offsets[:-1][has_neighbors, None] + pos[has_neighbors]]

    columns = []
    for j, spec in enumerate(d.schema):
        col = d.columns[j].copy()
        take = modified[:, j]
        if take.any():
            col[take] = d.columns[j][donor_row[take, j]]
        if spec.kind == NUMERIC:
            col[nullified] = np.nan
        else:
            col[nullified] = -1
        columns.append(col)
    out = Dataset(d.schema, columns)
    return PerturbedDataset(data=out, modified=modified, nullified=nullified)


def provenance_check(d: Dataset, out: PerturbedDataset, ns: NeighborhoodSet) -> bool:
    """True iff the released data is exactly explainable by (d, ns).

    Checks, cell by cell: modified cells carry some neighbor's value in that
    column, unmodified cells carry the original value, and a record is
    nullified exactly when its neighbor set was empty.
    """
    if out.data.n != d.n or out.data.schema != d.schema or ns.n != d.n:
        return False
    for i in range(d.n):
        if out.nullified[i]:
            if ns.neighbors[i].size > 0:
                return False
            if any(out.data.cell(i, j) is not None for j in range(d.p)):
                return False
            continue
        for j in range(d.p):
            got = out.data.cell(i, j)
            if out.modified[i, j]:
                donors = {d.cell(int(t), j) for t in ns.neighbors[i]}
                if got not in donors:
                    return False
            elif got != d.cell(i, j):
                return False
    return True
