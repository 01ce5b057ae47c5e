"""Batch front end: perturb, evaluate, diagnose, and bench subcommands.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or usage,
3 data validation failure. All parameter validation happens before any
data file is opened. Every perturb run writes a JSON manifest next to its
output; replaying the same inputs and config reproduces the output byte
for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

from . import __version__
from .config import BACKENDS, INNER_BACKENDS, RwnConfig
from .dataset import NA_TOKEN, load_csv, load_schema, write_csv
from .dataset import standardize
from .distance import make_spec
from .engine import perturb
from .errors import ConfigError, DataValidationError, SchemaError
from .metrics import correlation_report, pca_report, privacy_report, regression_report
from .neighborhoods import build_exact_sweep, build_neighborhoods
from .parallel import default_workers
from .synth import gaussian_dataset


def _env_seed() -> int:
    raw = os.environ.get("RWN_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"RWN_SEED must be an integer, got {raw!r}") from None


def _add_common_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override its keys")
    p.add_argument("--eps", type=float, default=None, help="neighborhood radius (>= 0)")
    p.add_argument("--k", type=int, default=None, help="nearest-neighbor floor (>= 0)")
    p.add_argument("--q", type=float, default=None, help="per-cell modification probability in [0, 1]")
    p.add_argument("--seed", type=int, default=None, help="base seed (default: $RWN_SEED or 0)")
    p.add_argument("--backend", choices=BACKENDS, default=None)
    p.add_argument("--m", type=int, default=None, help="pool / per-point sample size (pool, pair_sample)")
    p.add_argument("--u", type=int, default=None, help="partition count (partitioned)")
    p.add_argument("--fresh-pool-per-point", action="store_true", default=None,
                   help="draw an independent pool per record (pool backend)")
    p.add_argument("--inner", choices=INNER_BACKENDS, default=None,
                   help="within-partition backend (partitioned)")
    p.add_argument("--weights", default=None,
                   help='JSON object of per-column distance weights, e.g. \'{"age": 0.5}\'')
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: available parallelism)")
    p.add_argument("--na", default=None, help=f"missing-value token (default {NA_TOKEN!r})")


def _merge_config(args) -> tuple[RwnConfig, int, str]:
    """Config file < flags; returns (config, workers, na token). Validates eagerly."""
    merged: dict = {}
    extras: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {args.config}: expected a JSON object")
        for key in ("workers", "na"):
            if key in loaded:
                extras[key] = loaded.pop(key)
        loaded.pop("input", None)
        loaded.pop("output", None)
        merged.update(loaded)
    for key in ("eps", "k", "q", "seed", "backend", "m", "u", "inner"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if getattr(args, "fresh_pool_per_point", None):
        merged["fresh_pool_per_point"] = True
    if getattr(args, "weights", None) is not None:
        try:
            merged["weights"] = json.loads(args.weights)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--weights is not valid JSON: {exc}") from None
    if "seed" not in merged:
        merged["seed"] = _env_seed()
    cfg = RwnConfig.from_dict(merged).validate()
    workers = args.workers if args.workers is not None else extras.get("workers") or default_workers()
    na = args.na if args.na is not None else extras.get("na", NA_TOKEN)
    return cfg, workers, na


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load(path, schema_path, na):
    schema = load_schema(schema_path) if schema_path else "infer"
    return load_csv(path, schema=schema, na=na)


def _manifest_path(out_path: str) -> str:
    root, _ = os.path.splitext(out_path)
    return root + ".manifest.json"


# -- perturb ---------------------------------------------------------------


def cmd_perturb(args) -> int:
    cfg, workers, na = _merge_config(args)
    t0 = time.perf_counter()
    d = _load(args.input, args.schema, na)
    view = standardize(d)
    spec = make_spec(view, cfg.weights)
    ns = build_neighborhoods(spec, cfg, workers)
    result = perturb(d, ns, cfg, workers)
    write_csv(result.data, args.out, na=na)
    wall = time.perf_counter() - t0
    manifest = {
        "tool": "rwn",
        "version": __version__,
        "command": "perturb",
        "config": cfg.to_dict(),
        "workers": workers,
        "na": na,
        "input": str(args.input),
        "schema": str(args.schema) if args.schema else None,
        "output": str(args.out),
        "input_sha256": _sha256(args.input),
        "output_sha256": _sha256(args.out),
        "n": d.n,
        "p": d.p,
        "wall_time_s": wall,
        "distance_evaluations": ns.distance_evaluations,
        "partition_evaluations": ns.partition_evaluations,
        "backend": ns.backend,
        "modified_cells": result.modified_cells,
        "nullified_records": result.nullified_records,
    }
    with open(_manifest_path(args.out), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(
        f"wrote {args.out}: {result.modified_cells} cells modified, "
        f"{len(result.nullified_records)} records nullified"
    )
    return 0


# -- evaluate ---------------------------------------------------------------


def _parse_regress(expr: str) -> tuple[str, list[str]]:
    if "~" not in expr:
        raise ConfigError(f"--regress expects 'response~pred1,pred2,...', got {expr!r}")
    response, rhs = expr.split("~", 1)
    predictors = [p.strip() for p in rhs.split(",") if p.strip()]
    if not response.strip() or not predictors:
        raise ConfigError(f"--regress expects 'response~pred1,pred2,...', got {expr!r}")
    return response.strip(), predictors


def cmd_evaluate(args) -> int:
    weights = None
    if args.weights is not None:
        try:
            weights = json.loads(args.weights)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--weights is not valid JSON: {exc}") from None
    regress = _parse_regress(args.regress) if args.regress else None
    na = args.na if args.na is not None else NA_TOKEN

    orig = _load(args.original, args.schema, na)
    pert = load_csv(args.perturbed, schema=orig.schema, na=na)

    corr = correlation_report(orig, pert) if any(c.kind == "numeric" for c in orig.schema) else None
    priv = privacy_report(orig, pert, weights)
    try:
        pca = pca_report(orig, pert)
    except DataValidationError:
        pca = None
    reg = regression_report(orig, pert, regress[0], regress[1]) if regress else None

    report = {
        "tool": "rwn",
        "version": __version__,
        "original": str(args.original),
        "released": str(args.perturbed),
        "n": orig.n,
        "p": orig.p,
        "correlation": corr.to_dict() if corr else None,
        "regression": reg.to_dict() if reg else None,
        "privacy": priv.to_dict(),
        "pca": pca.to_dict() if pca else None,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    if args.tables:
        _write_tables(args.tables, corr, reg, priv, pca)
    print(f"wrote {args.out}")
    return 0


def _write_matrix_csv(path, names, matrix) -> None:
    import csv as _csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _csv.writer(fh, lineterminator="\n")
        w.writerow(["column", *names])
        for name, row in zip(names, matrix):
            w.writerow([name, *[repr(float(v)) if v == v else "NA" for v in row]])


def _write_tables(outdir, corr, reg, priv, pca) -> None:
    import csv as _csv

    os.makedirs(outdir, exist_ok=True)
    if corr:
        _write_matrix_csv(os.path.join(outdir, "correlation_original.csv"), corr.columns, corr.original)
        _write_matrix_csv(os.path.join(outdir, "correlation_released.csv"), corr.columns, corr.released)
    if reg:
        with open(os.path.join(outdir, "cooks_distance.csv"), "w", encoding="utf-8", newline="") as fh:
            w = _csv.writer(fh, lineterminator="\n")
            w.writerow(["record_index", "original", "released"])
            for i, (a, b) in enumerate(zip(reg.original.cooks, reg.released.cooks)):
                w.writerow([i, repr(float(a)) if a == a else "NA", repr(float(b)) if b == b else "NA"])
    if priv:
        import numpy as np

        with open(os.path.join(outdir, "min_distance_quartiles.csv"), "w", encoding="utf-8", newline="") as fh:
            w = _csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", "min", "q1", "median", "q3", "max"])
            for name, vals in (
                ("original", priv.min_distance_original),
                ("released", priv.min_distance_released),
            ):
                finite = vals[np.isfinite(vals)]
                qs = np.quantile(finite, [0, 0.25, 0.5, 0.75, 1.0]) if finite.size else [float("nan")] * 5
                w.writerow([name, *[repr(float(v)) for v in qs]])
    if pca:
        with open(os.path.join(outdir, "pca_proportions.csv"), "w", encoding="utf-8", newline="") as fh:
            w = _csv.writer(fh, lineterminator="\n")
            w.writerow(["component", "sdev_original", "sdev_released", "proportion_original", "proportion_released"])
            for c in range(len(pca.original.sdev)):
                w.writerow(
                    [
                        c + 1,
                        repr(float(pca.original.sdev[c])),
                        repr(float(pca.released.sdev[c])),
                        repr(float(pca.original.proportion[c])),
                        repr(float(pca.released.proportion[c])),
                    ]
                )


# -- diagnose ----------------------------------------------------------------


def cmd_diagnose(args) -> int:
    import csv as _csv

    try:
        eps_values = [float(tok) for tok in args.eps.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--eps expects a comma-separated list of numbers, got {args.eps!r}") from None
    if not eps_values:
        raise ConfigError("--eps needs at least one value")
    if any(e < 0 or e != e for e in eps_values):
        raise ConfigError("eps values must be >= 0")
    if args.k < 0:
        raise ConfigError(f"k must be >= 0, got {args.k}")
    na = args.na if args.na is not None else NA_TOKEN
    workers = args.workers if args.workers is not None else default_workers()

    d = _load(args.input, args.schema, na)
    if d.n < 2:
        raise DataValidationError("diagnosis needs at least 2 records")
    if args.k > d.n - 1:
        raise ConfigError(f"k={args.k} exceeds n-1={d.n - 1}")
    spec = make_spec(standardize(d))
    sweeps = build_exact_sweep(spec, eps_values, args.k, workers)
    os.makedirs(args.out, exist_ok=True)
    for eps, ns in zip(eps_values, sweeps):
        path = os.path.join(args.out, f"profile_eps_{eps:g}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = _csv.writer(fh, lineterminator="\n")
            w.writerow(["record_index", "min_distance", "neighborhood_size"])
            for i in range(ns.n):
                w.writerow([i, repr(float(ns.min_distance[i])), int(ns.neighbors[i].size)])
        print(f"wrote {path}")
    return 0


# -- bench -------------------------------------------------------------------


def cmd_bench(args) -> int:
    import csv as _csv

    try:
        sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--sizes expects a comma-separated list of integers, got {args.sizes!r}") from None
    backends = [tok.strip() for tok in args.backends.split(",") if tok.strip()]
    for b in backends:
        if b not in BACKENDS:
            raise ConfigError(f"unknown backend {b!r}")
    if any(n < 2 for n in sizes):
        raise ConfigError("bench sizes must be >= 2")
    seed = args.seed if args.seed is not None else _env_seed()
    workers = args.workers if args.workers is not None else default_workers()

    rows = []
    for n in sizes:
        d = gaussian_dataset(n, p=args.features, seed=seed)
        spec = make_spec(standardize(d))
        for backend in backends:
            cfg = RwnConfig(
                eps=args.eps, k=args.k, q=1.0, seed=seed, backend=backend,
                m=args.m, u=args.u, inner=args.inner or "exact",
            ).validate()
            t0 = time.perf_counter()
            ns = build_neighborhoods(spec, cfg, workers)
            wall = time.perf_counter() - t0
            rows.append(
                {
                    "n": n,
                    "backend": backend,
                    "distance_evaluations": ns.distance_evaluations,
                    "wall_time_s": round(wall, 6),
                    "partition_evaluations": (
                        ";".join(str(c) for c in ns.partition_evaluations)
                        if ns.partition_evaluations
                        else ""
                    ),
                }
            )
            print(f"n={n} backend={backend} evals={ns.distance_evaluations} wall={wall:.3f}s")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = _csv.DictWriter(
                fh,
                fieldnames=["n", "backend", "distance_evaluations", "wall_time_s", "partition_evaluations"],
                lineterminator="\n",
            )
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {args.out}")
    return 0


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwn",
        description="Randomization within neighborhoods: perturb microdata, evaluate the released copy.",
    )
    parser.add_argument("--version", action="version", version=f"rwn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perturb", help="perturb a CSV and write the released copy plus a manifest")
    p.add_argument("--in", dest="input", required=True, help="input CSV (header row required)")
    p.add_argument("--schema", default=None, help="schema JSON; omitted = infer from data")
    p.add_argument("--out", required=True, help="output CSV path")
    _add_common_config_flags(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("evaluate", help="compare an original/released pair")
    p.add_argument("--original", required=True)
    p.add_argument("--perturbed", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--regress", default=None, help="response~pred1,pred2,... for the regression report")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--tables", default=None, help="directory for per-metric CSV tables")
    p.add_argument("--weights", default=None, help="JSON object of per-column distance weights")
    p.add_argument("--na", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("diagnose", help="min-distance / neighborhood-size tables over an eps sweep")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--eps", required=True, help="comma-separated eps values")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory (one table per eps)")
    p.add_argument("--na", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("bench", help="distance-evaluation counters and wall time per backend")
    p.add_argument("--sizes", required=True, help="comma-separated synthetic dataset sizes")
    p.add_argument("--backends", default="exact", help="comma-separated backend names")
    p.add_argument("--features", type=int, default=4)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--u", type=int, default=None)
    p.add_argument("--inner", choices=INNER_BACKENDS, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="optional CSV output")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SchemaError, DataValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
