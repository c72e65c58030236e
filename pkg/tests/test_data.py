import json

import numpy as np
import pytest

from cutkit.data import load_iris, load_results, persist_results, scale_to_angle, split
from cutkit.errors import BadRangeError, ParseError


def test_iris_shape_and_balance():
    ds = load_iris()
    assert ds.features.shape == (150, 4)
    assert ds.labels.shape == (150,)
    assert [int((ds.labels == c).sum()) for c in range(3)] == [50, 50, 50]


def test_iris_value_range():
    ds = load_iris()
    assert ds.features.min() >= 0.1
    assert ds.features.max() <= 8.0


def test_iris_contains_reference_versicolor_row():
    ds = load_iris()
    target = np.array([5.9, 3.0, 4.2, 1.5])
    hits = np.all(np.isclose(ds.features, target), axis=1)
    assert hits.any()
    assert (ds.labels[hits] == 1).all()


def test_split_sizes_and_partition():
    ds = load_iris()
    train, test = split(ds, seed=0)
    assert len(train.labels) == 112 and len(test.labels) == 38

    def rows(d):
        return {tuple(f) + (int(l),) for f, l in zip(d.features, d.labels)}

    assert rows(train) | rows(test) == rows(ds)
    assert len(train.labels) + len(test.labels) == 150


def test_split_deterministic():
    ds = load_iris()
    a_train, a_test = split(ds, seed=7)
    b_train, b_test = split(ds, seed=7)
    assert np.array_equal(a_train.features, b_train.features)
    assert np.array_equal(a_test.labels, b_test.labels)
    c_train, _ = split(ds, seed=8)
    assert not np.array_equal(a_train.features, c_train.features)


def test_split_bad_fraction():
    ds = load_iris()
    with pytest.raises(BadRangeError):
        split(ds, test_fraction=0.0, seed=0)
    with pytest.raises(BadRangeError):
        split(ds, test_fraction=1.0, seed=0)


def test_scale_to_angle_range():
    ds = load_iris()
    scaled = scale_to_angle(ds.features)
    assert scaled.min() == pytest.approx(0.0)
    assert scaled.max() == pytest.approx(np.pi)


def test_persist_roundtrip(tmp_path):
    record = {
        "schema_version": 1,
        "metrics": {"accuracy": 0.875, "loss_history": [1.0, 0.9]},
        "seed": 42,
    }
    path = tmp_path / "report.json"
    persist_results(path, record)
    assert load_results(path) == record


def test_load_results_requires_schema_version(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"metrics": {}}))
    with pytest.raises(ParseError):
        load_results(path)
