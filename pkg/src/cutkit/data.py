"""Bundled Iris data, deterministic splits, and result persistence."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ._rng import rng_stream
from .errors import AssetCorruptError, BadRangeError, ParseError, PersistenceError

IRIS_SHA256 = "874d28c2148c94ac8bed1b98ab1d93d27a473f72b2a712b06833f49b3259e54d"
SCHEMA_VERSION = 1

CLASS_NAMES = ("setosa", "versicolor", "virginica")


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (rows, 4), centimeters
    labels: np.ndarray  # (rows,), ints in {0, 1, 2}

    def __len__(self) -> int:
        return len(self.labels)


def load_iris() -> Dataset:
    """The bundled 150-row Iris table, checksum-verified."""
    text = resources.files("cutkit.assets").joinpath("iris.csv").read_text()
    digest = hashlib.sha256(text.encode()).hexdigest()
    if digest != IRIS_SHA256:
        raise AssetCorruptError(f"iris.csv checksum mismatch: {digest}")
    rows = text.strip().split("\n")[1:]
    features = np.array([[float(v) for v in r.split(",")[:4]] for r in rows])
    labels = np.array([int(r.split(",")[4]) for r in rows])
    return Dataset(features, labels)


def split(dataset: Dataset, test_fraction: float = 0.25, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seed-deterministic uniform shuffle split; no stratification."""
    if not 0.0 < test_fraction < 1.0:
        raise BadRangeError("test_fraction must lie in (0, 1)")
    n = len(dataset)
    n_test = max(1, int(math.floor(n * test_fraction + 0.5)))
    order = rng_stream(seed, 10).permutation(n)
    test_idx, train_idx = order[:n_test], order[n_test:]
    return (
        Dataset(dataset.features[train_idx], dataset.labels[train_idx]),
        Dataset(dataset.features[test_idx], dataset.labels[test_idx]),
    )


def scale_to_angle(features: np.ndarray) -> np.ndarray:
    """Optional min-max rescale of each feature column to [0, pi]."""
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    return math.pi * (features - lo) / np.where(hi > lo, hi - lo, 1.0)


def persist_results(path, record: dict) -> None:
    """Write a result record as JSON with a schema version stamp."""
    doc = {"schema_version": SCHEMA_VERSION, **record}
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise PersistenceError(f"cannot write {path}: {exc}") from exc


def load_results(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise PersistenceError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed results file {path}: {exc}") from exc
    if "schema_version" not in doc:
        raise ParseError(f"{path} missing schema_version")
    return doc
