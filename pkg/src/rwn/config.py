"""Tuning parameters for a perturbation run."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .errors import ConfigError

BACKENDS = ("exact", "pool", "pair_sample", "partitioned")
INNER_BACKENDS = ("exact", "pool", "pair_sample")


@dataclass
class RwnConfig:
    """Neighborhood radius eps, neighbor floor k, modification probability q,
    plus the backend selection and its sizes.

    eps and k are always combined ("whichever set is larger"); eps-only mode
    is k=0 and k-only mode is eps=0. m is the pool / per-point sample size for
    the pool and pair_sample backends, u the partition count for the
    partitioned backend (whose within-partition method is `inner`).
    """

    eps: float = 0.0
    k: int = 0
    q: float = 1.0
    seed: int = 0
    backend: str = "exact"
    m: int | None = None
    u: int | None = None
    fresh_pool_per_point: bool = False
    inner: str = "exact"
    weights: dict[str, float] | None = None

    def validate(self) -> "RwnConfig":
        if math.isnan(self.eps) or self.eps < 0:
            raise ConfigError(f"eps must be >= 0, got {self.eps}")
        if int(self.k) != self.k or self.k < 0:
            raise ConfigError(f"k must be a nonnegative integer, got {self.k}")
        if not (0.0 <= self.q <= 1.0):
            raise ConfigError(f"q must be in [0, 1], got {self.q}")
        if int(self.seed) != self.seed:
            raise ConfigError(f"seed must be an integer, got {self.seed}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.inner not in INNER_BACKENDS:
            raise ConfigError(f"inner must be one of {INNER_BACKENDS}, got {self.inner!r}")
        needs_m = self.backend in ("pool", "pair_sample") or (
            self.backend == "partitioned" and self.inner in ("pool", "pair_sample")
        )
        if needs_m:
            if self.m is None or int(self.m) != self.m or self.m < 1:
                raise ConfigError(f"m must be a positive integer for backend {self.backend!r}, got {self.m}")
        if self.backend == "partitioned":
            if self.u is None or int(self.u) != self.u or self.u < 1:
                raise ConfigError(f"u must be a positive integer for the partitioned backend, got {self.u}")
        if self.weights is not None:
            for name, w in self.weights.items():
                if not (w >= 0):
                    raise ConfigError(f"weight for column {name!r} must be nonnegative")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "RwnConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)
