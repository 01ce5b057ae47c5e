"""Synthetic dataset generators for benchmarks, checks, and stand-in corpora.

body_like and pima_like are structural stand-ins for the classic body-fat
and Pima diabetes tables: same shape, same statistical character (collinear
measurements plus one gross outlier; overlapping binary classes), but
generated, not real measurements.
"""

from __future__ import annotations

import numpy as np

from . import rng
from .dataset import CATEGORICAL, NUMERIC, ColumnSchema, Dataset


def bivariate_normal(n: int, rho: float, seed: int = 0, names: tuple[str, str] = ("x", "y")) -> Dataset:
    """n draws of a standard bivariate normal with correlation rho."""
    if not (-1.0 < rho < 1.0):
        raise ValueError(f"need |rho| < 1, got {rho}")
    g = rng.stream(seed, rng.DATA)
    z = g.standard_normal((n, 2))
    x = z[:, 0]
    y = rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
    schema = (ColumnSchema(names[0], NUMERIC), ColumnSchema(names[1], NUMERIC))
    return Dataset(schema, [x, y])


def gaussian_dataset(n: int, p: int = 4, seed: int = 0, equicorrelation: float = 0.3) -> Dataset:
    """n x p correlated Gaussian columns; benchmark fodder."""
    g = rng.stream(seed, rng.DATA)
    shared = g.standard_normal(n)
    w = np.sqrt(max(min(equicorrelation, 0.99), 0.0))
    cols = [w * shared + np.sqrt(1 - w * w) * g.standard_normal(n) for _ in range(p)]
    schema = tuple(ColumnSchema(f"x{j}", NUMERIC) for j in range(p))
    return Dataset(schema, cols)


def body_like(seed: int = 0, n: int = 241, outlier: bool = True) -> Dataset:
    """Body-measurement-style table: collinear girths, a response, one giant.

    Columns mirror the classic body-fat layout (age, weight, height, six
    girth measurements, bmi, siri response). Girths share a latent size
    factor (pairwise correlations around 0.6-0.9); the response follows a
    linear model in bmi/abdomen/hip plus noise. With outlier=True the last
    record is a physically extreme individual, the kind a privacy method
    must protect.
    """
    g = rng.stream(seed, rng.DATA)
    size = g.standard_normal(n)
    fat = g.standard_normal(n)

    def meas(center, spread, w_size, w_fat, noise):
        return center + spread * (w_size * size + w_fat * fat + noise * g.standard_normal(n))

    age = np.clip(meas(44, 12, 0.1, 0.2, 1.0), 21, 81)
    height = np.clip(meas(178, 6.5, 0.75, -0.05, 0.6), 150, 200)
    weight = np.clip(meas(81, 12, 0.8, 0.45, 0.35), 50, 200)
    neck = np.clip(meas(38, 2.4, 0.75, 0.30, 0.5), 30, 55)
    chest = np.clip(meas(100, 8.5, 0.70, 0.55, 0.35), 75, 140)
    abdomen = np.clip(meas(92, 10.5, 0.60, 0.70, 0.35), 65, 150)
    hip = np.clip(meas(100, 7, 0.65, 0.55, 0.40), 80, 150)
    thigh = np.clip(meas(59, 5, 0.55, 0.55, 0.55), 45, 90)
    wrist = np.clip(meas(18.2, 0.9, 0.8, 0.05, 0.55), 15, 22)
    bmi = weight / (height / 100.0) ** 2
    siri = np.clip(
        -42.0 + 0.32 * abdomen + 0.54 * bmi + 0.12 * hip - 0.35 * wrist + 2.2 * g.standard_normal(n),
        4.5,
        48.0,
    )
    if outlier:
        # one individual far outside the cloud, analogous to the famous
        # heaviest subject in the original table
        i = n - 1
        height[i] = 184.0
        weight[i] = 165.0
        neck[i] = 51.2
        chest[i] = 136.2
        abdomen[i] = 148.1
        hip[i] = 147.7
        thigh[i] = 87.3
        wrist[i] = 21.4
        age[i] = 46.0
        bmi[i] = weight[i] / (height[i] / 100.0) ** 2
        siri[i] = 47.5

    names = ["siri", "age", "weight", "height", "neck", "chest", "abdomen", "hip", "thigh", "wrist", "bmi"]
    cols = [siri, age, weight, height, neck, chest, abdomen, hip, thigh, wrist, bmi]
    schema = tuple(ColumnSchema(name, NUMERIC) for name in names)
    return Dataset(schema, cols)


def pima_like(seed: int = 0, n: int = 768) -> Dataset:
    """Diabetes-study-style table: 8 numeric features, overlapping binary label.

    Class separation is tuned so a plain nearest-neighbor classifier lands
    around 25% holdout error, like the original study's difficulty.
    """
    g = rng.stream(seed, rng.DATA)
    label = (g.random(n) < 0.35).astype(np.int64)
    shift = label.astype(np.float64)

    def feat(center, spread, w_class, noise=1.0):
        return center + spread * (w_class * shift + noise * g.standard_normal(n))

    pregnancies = np.clip(np.round(feat(3.2, 3.1, 0.45)), 0, 17)
    glucose = np.clip(feat(110, 28, 1.05), 55, 200)
    pressure = np.clip(feat(69, 14, 0.30), 35, 120)
    triceps = np.clip(feat(20.5, 10, 0.45), 5, 60)
    insulin = np.clip(feat(80, 70, 0.55), 10, 500)
    bmi = np.clip(feat(31.2, 6.5, 0.55), 18, 55)
    pedigree = np.clip(feat(0.47, 0.33, 0.25), 0.05, 2.5)
    age = np.clip(np.round(feat(33, 11, 0.55)), 21, 81)

    schema = (
        ColumnSchema("pregnancies", NUMERIC),
        ColumnSchema("glucose", NUMERIC),
        ColumnSchema("pressure", NUMERIC),
        ColumnSchema("triceps", NUMERIC),
        ColumnSchema("insulin", NUMERIC),
        ColumnSchema("bmi", NUMERIC),
        ColumnSchema("pedigree", NUMERIC),
        ColumnSchema("age", NUMERIC),
        ColumnSchema("outcome", CATEGORICAL, ("neg", "pos")),
    )
    return Dataset(
        schema,
        [pregnancies, glucose, pressure, triceps, insulin, bmi, pedigree, age, label],
    )


def scramble_columns(d: Dataset, seed: int = 0) -> Dataset:
    """Independently permute each column: marginals preserved, joint destroyed.

    Negative control for the small-neighborhood limit check.
    """
    cols = []
    for j, col in enumerate(d.columns):
        perm = rng.stream(seed, j, rng.SHUFFLE).permutation(d.n)
        cols.append(col[perm])
    return Dataset(d.schema, cols)
