import numpy as np
import pytest

from rwn.config import RwnConfig
from rwn.dataset import CATEGORICAL, NUMERIC, ColumnSchema, Dataset
from rwn.errors import ConfigError, SchemaError
from rwn.metrics import classification_study
from rwn.synth import pima_like


def small_labeled(n=60, seed=0, rare=False):
    g = np.random.default_rng(seed)
    x = g.normal(size=n)
    y = (x + 0.5 * g.normal(size=n) > 0).astype(int)
    labels = np.array(["lo", "hi"])[y].tolist()
    if rare:
        labels[0] = "rare"
    schema = (
        ColumnSchema("x", NUMERIC),
        ColumnSchema("cls", CATEGORICAL, tuple(sorted(set(labels)))),
    )
    return Dataset.from_rows(schema, [[float(a), b] for a, b in zip(x, labels)])


def test_q_zero_config_equals_baseline_bitwise():
    d = pima_like(seed=4, n=200)
    cfgs = [RwnConfig(eps=0.3, k=5, q=0.0, seed=9)]
    rep = classification_study(d, "outcome", cfgs, holdout=50, replications=4, seed=13)
    assert rep.rows[0].rates == rep.rows[1].rates


def test_study_is_deterministic():
    d = pima_like(seed=4, n=150)
    cfgs = [RwnConfig(eps=0.3, k=5, q=0.5, seed=9)]
    a = classification_study(d, "outcome", cfgs, holdout=40, replications=3, seed=2)
    b = classification_study(d, "outcome", cfgs, holdout=40, replications=3, seed=2)
    assert a.rows[1].rates == b.rows[1].rates
    c = classification_study(d, "outcome", cfgs, holdout=40, replications=3, seed=2, workers=3)
    assert a.rows[1].rates == c.rows[1].rates


def test_rare_class_splits_discarded_and_redrawn():
    d = small_labeled(n=40, seed=1, rare=True)
    cfgs = [RwnConfig(eps=0.5, k=3, q=0.5, seed=5)]
    rep = classification_study(d, "cls", cfgs, holdout=20, replications=8, seed=7)
    # the single 'rare' record lands in the holdout half the time on average
    assert rep.discarded_splits > 0
    assert len(rep.rows[0].rates) == 8


def test_pluggable_predictor():
    class MajorityPredictor:
        def get_params(self, deep=True):
            return {}

        def set_params(self, **kw):
            return self

        def fit(self, X, y):
            vals, counts = np.unique(np.asarray(y), return_counts=True)
            self.majority_ = vals[int(np.argmax(counts))]
            return self

        def predict(self, X):
            import rwn

            n = X.n if hasattr(X, "n") else len(X)
            return np.full(n, self.majority_)

    d = small_labeled(n=60, seed=2)
    rep = classification_study(
        d, "cls", [RwnConfig(q=0.0, eps=0.4, k=3, seed=1)],
        predictor=MajorityPredictor(), holdout=20, replications=3, seed=5,
    )
    for row in rep.rows:
        assert all(0.0 <= r <= 1.0 for r in row.rates)
    assert rep.rows[0].rates == rep.rows[1].rates


def test_label_must_be_categorical():
    d = small_labeled()
    with pytest.raises(SchemaError):
        classification_study(d, "x", [], holdout=10, replications=2, seed=0)


def test_holdout_bounds():
    d = small_labeled()
    with pytest.raises(ConfigError):
        classification_study(d, "cls", [], holdout=d.n, replications=2, seed=0)
    with pytest.raises(ConfigError):
        classification_study(d, "cls", [], holdout=0, replications=2, seed=0)


def test_report_shape_and_means():
    d = pima_like(seed=6, n=150)
    cfgs = [RwnConfig(eps=0.25, k=k, q=0.5, seed=3) for k in (3, 7)]
    rep = classification_study(d, "outcome", cfgs, holdout=30, replications=3, seed=1)
    assert [r.name for r in rep.rows] == ["baseline", "config_0", "config_1"]
    for row in rep.rows:
        assert row.mean_rate == pytest.approx(float(np.mean(row.rates)))
    assert rep.rows[1].config["k"] == 3
