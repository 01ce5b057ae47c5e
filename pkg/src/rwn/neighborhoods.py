"""Per-record neighbor sets: the exact method and its three scalable variants.

Every backend applies the same membership rule per record i: compare the
eps-ball around i (self excluded) with the k-nearest-neighbor set, both
restricted to whatever candidates the backend evaluated, and keep whichever
set has more members (the eps-ball on ties). Ties at the k-th distance break
toward the smaller row index.

Backends:

* exact        -- all pairs, each evaluated once (symmetric caching); O(n^2)
                  distance evaluations and transiently O(n^2) memory.
* pool         -- candidates come from one random sample of m records (or a
                  fresh sample per record); O(mn).
* pair_sample  -- ceil(nm/2) pair ranks drawn from the linearized strict
                  triangle of the distance matrix, decoded to pairs, stored
                  in an undirected distance graph; neighborhoods read each
                  record's incident edges only.
* partitioned  -- records shuffled into u near-equal partitions, any inner
                  backend applied within each partition independently.

All randomness comes from streams keyed by (seed, record/partition), so
results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .distance import DistanceSpec, sq_distances_from, sq_distances_pairs
from .errors import ConfigError, DataValidationError

__all__ = [
    "NeighborhoodSet",
    "PairSample",
    "DistanceGraph",
    "build_exact",
    "build_exact_sweep",
    "build_pool",
    "build_pair_sample",
    "build_partitioned",
    "build_neighborhoods",
    "build_graph",
    "build_from_graph",
    "encode_rank",
    "decode_rank",
    "decode_ranks",
    "sample_pairs",
    "min_distance_profile",
]


@dataclass
class NeighborhoodSet:
    """Neighbor indices per record plus build provenance.

    neighbors[i] is a sorted int array, never containing i. min_distance[i]
    is the smallest evaluated distance from i (the true nearest-record
    distance for the exact backend; NaN when the backend evaluated no
    candidate for i). distance_evaluations counts unique distance
    computations performed by the build.
    """

    neighbors: list[np.ndarray]
    min_distance: np.ndarray
    backend: str
    params: dict
    distance_evaluations: int
    partition_evaluations: list[int] | None = None
    partition_assignment: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.neighbors)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s.size for s in self.neighbors], dtype=np.int64)


def _empty_idx() -> np.ndarray:
    return np.empty(0, dtype=np.int64)


def _k_smallest(dists: np.ndarray, idxs: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest distances, ties at the cut by smaller index."""
    if k <= 0:
        return _empty_idx()
    if k >= idxs.size:
        return np.sort(idxs)
    kth = np.partition(dists, k - 1)[k - 1]
    mask = dists <= kth
    cd, ci = dists[mask], idxs[mask]
    if ci.size == k:
        return np.sort(ci)
    order = np.lexsort((ci, cd))[:k]
    return np.sort(ci[order])


def _select(dists: np.ndarray, idxs: np.ndarray, eps: float, k: int) -> np.ndarray:
    """Membership rule over one record's evaluated candidates."""
    if idxs.size == 0:
        return _empty_idx()
    ball = idxs[dists <= eps]
    if ball.size >= min(k, idxs.size):
        return np.sort(ball)
    return _k_smallest(dists, idxs, k)


def _check_eps_k(eps: float, k: int) -> None:
    if math.isnan(eps) or eps < 0:
        raise ConfigError(f"eps must be >= 0, got {eps}")
    if int(k) != k or k < 0:
        raise ConfigError(f"k must be a nonnegative integer, got {k}")


# -- exact backend ------------------------------------------------------


def _fill_matrix(spec: DistanceSpec, members: np.ndarray, workers: int | None) -> tuple[np.ndarray, int]:
    """Distance matrix over `members` (sorted global ids); each pair once."""
    from .parallel import map_chunks

    c = members.size
    D = np.empty((c, c))
    np.fill_diagonal(D, np.inf)

    def fill(start: int, stop: int) -> int:
        done = 0
        for a in range(start, stop):
            rest = members[a + 1:]
            if rest.size:
                d = np.sqrt(sq_distances_from(spec, int(members[a]), rest))
                D[a, a + 1:] = d
                D[a + 1:, a] = d
                done += rest.size
        return done

    counts = map_chunks(c, fill, workers)
    return D, sum(counts)


def _matrix_neighborhoods(
    D: np.ndarray, members: np.ndarray, eps_values, k: int
) -> tuple[list[list[np.ndarray]], np.ndarray]:
    """Per-eps neighbor lists and min distances from a filled matrix."""
    c = members.size
    per_eps: list[list[np.ndarray]] = [[None] * c for _ in eps_values]
    mins = np.full(c, np.nan)
    knn_size = min(k, c - 1)
    for a in range(c):
        row = D[a]
        if c >= 2:
            mins[a] = row.min()
        kset = None
        for e, eps in enumerate(eps_values):
            ball = np.flatnonzero(row <= eps)
            if ball.size >= knn_size:
                per_eps[e][a] = members[ball]
            else:
                if kset is None:
                    idxs = np.delete(np.arange(c), a)
                    kset = members[_k_smallest(row[idxs], idxs, knn_size)]
                per_eps[e][a] = kset
    return per_eps, mins


def build_exact_sweep(
    spec: DistanceSpec, eps_values, k: int, workers: int | None = None
) -> list[NeighborhoodSet]:
    """Exact neighborhoods for several eps values off one distance pass.

    Each returned set reports the shared pass's n(n-1)/2 evaluations.
    """
    n = spec.n
    for eps in eps_values:
        _check_eps_k(eps, k)
    if k > max(n - 1, 0):
        raise ConfigError(f"k={k} exceeds n-1={n - 1}")
    members = np.arange(n, dtype=np.int64)
    D, count = _fill_matrix(spec, members, workers)
    per_eps, mins = _matrix_neighborhoods(D, members, eps_values, k)
    return [
        NeighborhoodSet(
            neighbors=per_eps[e],
            min_distance=mins.copy(),
            backend="exact",
            params={"eps": float(eps), "k": int(k)},
            distance_evaluations=count,
        )
        for e, eps in enumerate(eps_values)
    ]


def build_exact(spec: DistanceSpec, eps: float, k: int, workers: int | None = None) -> NeighborhoodSet:
    """All-pairs neighborhoods: eps-ball vs k-nearest, whichever is larger."""
    return build_exact_sweep(spec, [eps], k, workers)[0]


# -- pool backend (Method 1) ---------------------------------------------


def build_pool(
    spec: DistanceSpec,
    eps: float,
    k: int,
    m: int,
    fresh_pool_per_point: bool = False,
    seed: int = 0,
    workers: int | None = None,
) -> NeighborhoodSet:
    """Neighbors drawn from a random pool of m records instead of all n.

    One shared pool by default; with fresh_pool_per_point an independent
    pool is drawn per record from its own (seed, record) stream.
    """
    from .parallel import map_chunks

    n = spec.n
    _check_eps_k(eps, k)
    if int(m) != m or not (1 <= m <= n):
        raise ConfigError(f"m must be in [1, n={n}], got {m}")
    shared = None
    if not fresh_pool_per_point:
        shared = np.sort(rng.stream(seed, rng.POOL).choice(n, size=m, replace=False)).astype(np.int64)

    neighbors: list[np.ndarray] = [None] * n
    mins = np.full(n, np.nan)

    def work(start: int, stop: int) -> int:
        done = 0
        for i in range(start, stop):
            pool = shared
            if pool is None:
                pool = np.sort(rng.stream(seed, i, rng.POOL).choice(n, size=m, replace=False)).astype(np.int64)
            cand = pool[pool != i]
            if cand.size == 0:
                neighbors[i] = _empty_idx()
                continue
            d = np.sqrt(sq_distances_from(spec, i, cand))
            done += cand.size
            mins[i] = d.min()
            neighbors[i] = _select(d, cand, eps, k)
        return done

    count = sum(map_chunks(n, work, workers))
    return NeighborhoodSet(
        neighbors=neighbors,
        min_distance=mins,
        backend="pool",
        params={"eps": float(eps), "k": int(k), "m": int(m), "fresh_pool_per_point": bool(fresh_pool_per_point)},
        distance_evaluations=count,
    )


# -- pair ranks and the triangular codec (Method 2) -----------------------


def encode_rank(i: int, j: int) -> int:
    """Rank of pair (i, j), 1 <= i < j, in the linearized strict triangle."""
    if i < 1 or j <= i:
        raise ValueError(f"need 1 <= i < j, got ({i}, {j})")
    return (j - 1) * (j - 2) // 2 + i


def decode_rank(r: int) -> tuple[int, int]:
    """Inverse of encode_rank: the unique (i, j) with (j-1)(j-2)/2 + i = r."""
    if r < 1:
        raise ValueError(f"rank must be >= 1, got {r}")
    t = 8 * r + 1
    v = math.isqrt(t)
    if v % 2 == 1 and v * v == t:
        j = (1 + v) // 2
        return j - 1, j
    j = (3 + v) // 2 if v % 2 == 1 else (2 + v) // 2
    return r - (j - 1) * (j - 2) // 2, j


def decode_ranks(ranks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized decode_rank; bit-identical to the scalar version."""
    r = np.asarray(ranks, dtype=np.int64)
    if r.size and int(r.min()) < 1:
        raise ValueError("ranks must be >= 1")
    t = 8 * r + 1
    v = np.floor(np.sqrt(t.astype(np.float64))).astype(np.int64)
    # float sqrt can land one off; nudge back onto the integer square root
    v -= v * v > t
    v += (v + 1) ** 2 <= t
    odd = (v & 1).astype(bool)
    exact = v * v == t
    j = np.where(odd & exact, (1 + v) // 2, np.where(odd, (3 + v) // 2, (2 + v) // 2))
    i = np.where(odd & exact, j - 1, r - (j - 1) * (j - 2) // 2)
    return i, j


@dataclass
class PairSample:
    """Distinct pair ranks drawn uniformly from the strict triangle."""

    n: int
    m: int
    n_s: int
    ranks: np.ndarray   # sorted, distinct, in [1, n(n-1)/2]
    pairs: np.ndarray   # n_s x 2, 1-based, i < j


def sample_pairs(n: int, m: int, seed: int = 0) -> PairSample:
    """Draw ceil(n*m/2) distinct pair ranks without replacement, uniformly."""
    if n < 2:
        raise ConfigError(f"pair sampling needs n >= 2, got n={n}")
    if int(m) != m or m < 1:
        raise ConfigError(f"m must be a positive integer, got {m}")
    total = n * (n - 1) // 2
    n_s = (n * m + 1) // 2
    if n_s > total:
        raise ConfigError(f"sample size {n_s} exceeds the {total} available pairs (n={n}, m={m})")
    g = rng.stream(seed, rng.PAIRS)
    if n_s == total:
        ranks = np.arange(1, total + 1, dtype=np.int64)
    elif n_s > total // 2:
        # near saturation, rejection-sample the complement instead
        keep = np.ones(total + 1, dtype=bool)
        keep[_draw_distinct(g, total, total - n_s)] = False
        ranks = np.flatnonzero(keep[1:]).astype(np.int64) + 1
    else:
        ranks = np.sort(_draw_distinct(g, total, n_s))
    i, j = decode_ranks(ranks)
    return PairSample(n=n, m=int(m), n_s=n_s, ranks=ranks, pairs=np.column_stack([i, j]))


def _draw_distinct(g: np.random.Generator, total: int, count: int) -> np.ndarray:
    """count distinct uniform integers in [1, total] via a rejection set."""
    seen: set[int] = set()
    out = np.empty(count, dtype=np.int64)
    filled = 0
    while filled < count:
        batch = g.integers(1, total + 1, size=max(64, 2 * (count - filled)))
        for r in batch:
            r = int(r)
            if r not in seen:
                seen.add(r)
                out[filled] = r
                filled += 1
                if filled == count:
                    break
    return out


@dataclass
class DistanceGraph:
    """Undirected graph of sampled pairs with their distances (CSR adjacency)."""

    n: int
    edges: np.ndarray          # n_s x 2, 0-based, i < j
    edge_distances: np.ndarray
    offsets: np.ndarray        # CSR offsets into partners/partner_distances
    partners: np.ndarray       # sorted by index within each node
    partner_distances: np.ndarray
    distance_evaluations: int

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def incident(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.offsets[node], self.offsets[node + 1]
        return self.partners[lo:hi], self.partner_distances[lo:hi]


def build_graph(spec: DistanceSpec, sample: PairSample) -> DistanceGraph:
    """Evaluate each sampled pair's distance once and index both directions."""
    if sample.n != spec.n:
        raise DataValidationError(f"pair sample drawn for n={sample.n}, dataset has n={spec.n}")
    heads = sample.pairs[:, 0].astype(np.int64) - 1
    tails = sample.pairs[:, 1].astype(np.int64) - 1
    d = np.sqrt(sq_distances_pairs(spec, heads, tails))
    src = np.concatenate([heads, tails])
    dst = np.concatenate([tails, heads])
    dd = np.concatenate([d, d])
    order = np.lexsort((dst, src))
    src, dst, dd = src[order], dst[order], dd[order]
    offsets = np.searchsorted(src, np.arange(spec.n + 1))
    return DistanceGraph(
        n=spec.n,
        edges=np.column_stack([heads, tails]),
        edge_distances=d,
        offsets=offsets,
        partners=dst,
        partner_distances=dd,
        distance_evaluations=sample.n_s,
    )


def build_from_graph(g: DistanceGraph, eps: float, k: int) -> NeighborhoodSet:
    """Neighborhoods from incident edges only; isolated records get empty sets."""
    _check_eps_k(eps, k)
    neighbors: list[np.ndarray] = [None] * g.n
    mins = np.full(g.n, np.nan)
    for i in range(g.n):
        cand, d = g.incident(i)
        if cand.size == 0:
            neighbors[i] = _empty_idx()
            continue
        mins[i] = d.min()
        neighbors[i] = _select(d, cand, eps, k)
    return NeighborhoodSet(
        neighbors=neighbors,
        min_distance=mins,
        backend="pair_sample",
        params={"eps": float(eps), "k": int(k), "n_s": g.edge_count},
        distance_evaluations=g.distance_evaluations,
    )


def build_pair_sample(spec: DistanceSpec, eps: float, k: int, m: int, seed: int = 0) -> NeighborhoodSet:
    """Method 2 end to end: sample ranks, build the graph, read neighborhoods."""
    ns = build_from_graph(build_graph(spec, sample_pairs(spec.n, m, seed)), eps, k)
    ns.params["m"] = int(m)
    return ns


# -- partitioned backend (Method 3) ---------------------------------------


def build_partitioned(
    spec: DistanceSpec,
    eps: float,
    k: int,
    u: int,
    inner: str = "exact",
    m: int | None = None,
    fresh_pool_per_point: bool = False,
    seed: int = 0,
    workers: int | None = None,
) -> NeighborhoodSet:
    """Shuffle records into u near-equal partitions; run `inner` within each.

    Neighbor indices are reported in the original global row order. Every
    partition needs at least 2 records.
    """
    from .parallel import map_chunks

    n = spec.n
    _check_eps_k(eps, k)
    if int(u) != u or not (1 <= u <= n):
        raise ConfigError(f"u must be in [1, n={n}], got {u}")
    if inner not in ("exact", "pool", "pair_sample"):
        raise ConfigError(f"unknown inner backend {inner!r}")
    base, extra = divmod(n, u)
    if base < 2:
        raise ConfigError(f"u={u} makes partitions of size {base} < 2 (n={n})")

    perm = rng.stream(seed, rng.SHUFFLE).permutation(n)
    parts = []
    at = 0
    for pi in range(u):
        size = base + (1 if pi < extra else 0)
        parts.append(np.sort(perm[at : at + size]).astype(np.int64))
        at += size

    assignment = np.empty(n, dtype=np.int64)
    for pi, members in enumerate(parts):
        assignment[members] = pi

    neighbors: list[np.ndarray] = [None] * n
    mins = np.full(n, np.nan)
    part_counts = [0] * u

    def run_partition(start: int, stop: int) -> None:
        for pi in range(start, stop):
            members = parts[pi]
            part_seed = rng.derive_seed(seed, rng.PARTITION, pi)
            if inner == "exact":
                if k > members.size - 1:
                    raise ConfigError(
                        f"k={k} exceeds partition size - 1 = {members.size - 1} (partition {pi})"
                    )
                D, cnt = _fill_matrix(spec, members, None)
                per_eps, local_mins = _matrix_neighborhoods(D, members, [eps], k)
                local_sets = per_eps[0]
            elif inner == "pool":
                sub = _subset_pool(spec, members, eps, k, m, fresh_pool_per_point, part_seed)
                local_sets, local_mins, cnt = sub
            else:
                sub = _subset_pair_sample(spec, members, eps, k, m, part_seed)
                local_sets, local_mins, cnt = sub
            part_counts[pi] = cnt
            for a, gi in enumerate(members):
                neighbors[gi] = local_sets[a]
                mins[gi] = local_mins[a]

    map_chunks(u, run_partition, workers, min_chunk=1)
    return NeighborhoodSet(
        neighbors=neighbors,
        min_distance=mins,
        backend="partitioned",
        params={"eps": float(eps), "k": int(k), "u": int(u), "inner": inner, "m": m},
        distance_evaluations=sum(part_counts),
        partition_evaluations=part_counts,
        partition_assignment=assignment,
    )


def _subset_pool(spec, members, eps, k, m, fresh, seed):
    c = members.size
    if m is None or int(m) != m or not (1 <= m <= c):
        raise ConfigError(f"m must be in [1, partition size {c}], got {m}")
    shared = None
    g = rng.stream(seed, rng.POOL)
    if not fresh:
        shared = np.sort(g.choice(c, size=m, replace=False))
    sets, mins, count = [None] * c, np.full(c, np.nan), 0
    for a in range(c):
        local = shared
        if local is None:
            local = np.sort(rng.stream(seed, a, rng.POOL).choice(c, size=m, replace=False))
        cand = members[local[local != a]]
        if cand.size == 0:
            sets[a] = _empty_idx()
            continue
        d = np.sqrt(sq_distances_from(spec, int(members[a]), cand))
        count += cand.size
        mins[a] = d.min()
        sets[a] = _select(d, cand, eps, k)
    return sets, mins, count


def _subset_pair_sample(spec, members, eps, k, m, seed):
    c = members.size
    sample = sample_pairs(c, m, seed)
    heads = members[sample.pairs[:, 0] - 1]
    tails = members[sample.pairs[:, 1] - 1]
    d = np.sqrt(sq_distances_pairs(spec, heads, tails))
    local = {int(gi): ([], []) for gi in members}
    for a, b, dist in zip(heads, tails, d):
        local[int(a)][0].append(int(b))
        local[int(a)][1].append(dist)
        local[int(b)][0].append(int(a))
        local[int(b)][1].append(dist)
    sets, mins = [None] * c, np.full(c, np.nan)
    for a, gi in enumerate(members):
        cand, dist = local[int(gi)]
        if not cand:
            sets[a] = _empty_idx()
            continue
        cand = np.asarray(cand, dtype=np.int64)
        dist = np.asarray(dist)
        order = np.argsort(cand)
        cand, dist = cand[order], dist[order]
        mins[a] = dist.min()
        sets[a] = _select(dist, cand, eps, k)
    return sets, mins, sample.n_s


# -- dispatch and diagnostics ---------------------------------------------


def build_neighborhoods(spec: DistanceSpec, cfg, workers: int | None = None) -> NeighborhoodSet:
    """Build with the backend named in an RwnConfig."""
    if cfg.backend == "exact":
        if cfg.k > spec.n - 1:
            raise ConfigError(f"k={cfg.k} exceeds n-1={spec.n - 1}")
        return build_exact(spec, cfg.eps, cfg.k, workers)
    if cfg.backend == "pool":
        return build_pool(spec, cfg.eps, cfg.k, cfg.m, cfg.fresh_pool_per_point, cfg.seed, workers)
    if cfg.backend == "pair_sample":
        return build_pair_sample(spec, cfg.eps, cfg.k, cfg.m, cfg.seed)
    if cfg.backend == "partitioned":
        return build_partitioned(
            spec, cfg.eps, cfg.k, cfg.u, cfg.inner, cfg.m, cfg.fresh_pool_per_point, cfg.seed, workers
        )
    raise ConfigError(f"unknown backend {cfg.backend!r}")


def min_distance_profile(
    source, eps: float | None = None, k: int | None = None, workers: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """(min distance, neighborhood size) per record, for the Fig-1-style diagnostic.

    Accepts a built NeighborhoodSet, or a DistanceSpec plus eps and k (an
    exact build is run). Requires n >= 2.
    """
    if isinstance(source, NeighborhoodSet):
        ns = source
    else:
        if eps is None or k is None:
            raise ConfigError("profiling a DistanceSpec needs eps and k")
        ns = build_exact(source, eps, k, workers)
    if ns.n < 2:
        raise DataValidationError("min-distance profile needs at least 2 records")
    return ns.min_distance.copy(), ns.sizes
