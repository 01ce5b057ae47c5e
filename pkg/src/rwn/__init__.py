"""Randomization Within Neighborhoods: statistical disclosure control for microdata.

Perturbs each record cell-by-cell with values drawn from the record's
neighborhood (eps-ball or k-nearest, whichever is larger), preserving
multivariate structure while protecting outliers and inliers. Exact and
sampled neighborhood backends, a full utility/privacy evaluation suite,
and a batch CLI.
"""

__version__ = "0.1.0"

from .config import RwnConfig
from .dataset import (
    CATEGORICAL,
    NUMERIC,
    ColumnSchema,
    Dataset,
    StandardizedView,
    load_csv,
    load_schema,
    save_schema,
    standardize,
    write_csv,
)
from .distance import DistanceSpec, distance, make_spec, pairwise_count
from .engine import PerturbedDataset, perturb, provenance_check
from .errors import ConfigError, ConvergenceError, DataValidationError, RwnError, SchemaError
from .estimator import NearestNeighborClassifier, RwnPerturber, as_dataset
from .metrics import (
    LimitCheckConfig,
    classification_study,
    correlation_report,
    joint_cdf_gap,
    limit_check,
    pca_report,
    privacy_report,
    regression_report,
)
from .neighborhoods import (
    DistanceGraph,
    NeighborhoodSet,
    PairSample,
    build_exact,
    build_exact_sweep,
    build_from_graph,
    build_graph,
    build_neighborhoods,
    build_pair_sample,
    build_partitioned,
    build_pool,
    decode_rank,
    decode_ranks,
    encode_rank,
    min_distance_profile,
    sample_pairs,
)

__all__ = [
    "__version__",
    "RwnConfig",
    "ColumnSchema",
    "Dataset",
    "StandardizedView",
    "NUMERIC",
    "CATEGORICAL",
    "load_csv",
    "write_csv",
    "load_schema",
    "save_schema",
    "standardize",
    "DistanceSpec",
    "distance",
    "make_spec",
    "pairwise_count",
    "PerturbedDataset",
    "perturb",
    "provenance_check",
    "RwnError",
    "ConfigError",
    "SchemaError",
    "DataValidationError",
    "ConvergenceError",
    "RwnPerturber",
    "NearestNeighborClassifier",
    "as_dataset",
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
    "LimitCheckConfig",
    "limit_check",
    "joint_cdf_gap",
    "classification_study",
    "correlation_report",
    "regression_report",
    "privacy_report",
    "pca_report",
]
