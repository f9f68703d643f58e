"""Synthetic problem generators, CSV ingestion and experiment splits.

Generators draw two Gaussian clusters around symmetric centers and hand
back the dataset together with the held-back true labels of the
unlabeled block; splitters partition fully labeled datasets into
labeled/unlabeled/test pieces without replacement. Everything is a pure
function of its inputs and a seed.

CSV files carry raw feature columns plus a label column (empty field =
unlabeled) and, optionally, a ``true_label`` column with the hidden
ground truth. The intercept is a load-time convention: it is appended as
a trailing ones column by the loader/generators and never stored in the
file itself.
"""

from __future__ import annotations

import csv
import enum
import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    CapacityError,
    DegenerateSplitError,
    DimensionError,
    InvalidInputError,
    ParseError,
    SchemaError,
)
from .model import Dataset, RidgeConfig

__all__ = [
    "CsvSchema",
    "Split",
    "SyntheticKind",
    "SyntheticSpec",
    "derive_rng",
    "generate",
    "load_csv",
    "sample_learning_curve_split",
    "save_csv",
    "split_for_local_optima",
    "zscore",
]

TRUE_LABEL_COLUMN = "true_label"
MAX_SEED = 2**64 - 1


def derive_rng(seed, *key):
    """Generator for stream ``key`` of the root ``seed``.

    Distinct keys give statistically independent streams, so parallel
    repeats can be seeded as ``derive_rng(seed, repeat_index)``. Passing
    an existing Generator returns it unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(sequence)


class SyntheticKind(enum.Enum):
    TWO_CLUSTER_1D = "two-cluster-1d"
    TWO_GAUSSIAN_2D = "two-gaussian-2d"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic two-class problem.

    Class centers sit at ``-separation/2`` and ``+separation/2`` on the
    first axis with isotropic Gaussian noise. Defaults reproduce the
    standard small demonstration problem: 2 labeled points per class and
    396 unlabeled points.
    """

    kind: SyntheticKind = SyntheticKind.TWO_CLUSTER_1D
    labeled_per_class: int = 2
    unlabeled_total: int = 396
    class_separation: float = 4.0
    noise_sd: float = 1.0
    seed: int = 0
    intercept: bool = True

    def __post_init__(self):
        if self.labeled_per_class < 1:
            raise InvalidInputError("labeled_per_class must be at least 1")
        if self.unlabeled_total < 0:
            raise InvalidInputError("unlabeled_total must be nonnegative")
        if not self.class_separation > 0.0:
            raise InvalidInputError("class_separation must be positive")
        if not self.noise_sd > 0.0:
            raise InvalidInputError("noise_sd must be positive")
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise InvalidInputError("seed must fit in 64 unsigned bits")


_KIND_DIMS = {SyntheticKind.TWO_CLUSTER_1D: 1, SyntheticKind.TWO_GAUSSIAN_2D: 2}


def generate(spec):
    """Draw a dataset from the spec; returns ``(dataset, unlabeled_truth)``.

    The true class of every unlabeled point is returned separately and is
    never part of the dataset itself, so solvers cannot see it.
    """
    if spec.kind not in _KIND_DIMS:
        raise InvalidInputError(f"kind {spec.kind.value!r} has no built-in generator")
    dim = _KIND_DIMS[spec.kind]
    rng = derive_rng(spec.seed)
    offset = spec.class_separation / 2.0

    def draw(count, positive):
        center = np.zeros(dim)
        center[0] = offset if positive else -offset
        return center + spec.noise_sd * rng.standard_normal((count, dim))

    per_class = spec.labeled_per_class
    labeled = np.vstack([draw(per_class, False), draw(per_class, True)])
    labels = np.concatenate([np.zeros(per_class), np.ones(per_class)])
    n_positive = spec.unlabeled_total // 2
    n_negative = spec.unlabeled_total - n_positive
    unlabeled = np.vstack([draw(n_negative, False), draw(n_positive, True)])
    truth = np.concatenate([np.zeros(n_negative), np.ones(n_positive)])
    if spec.intercept:
        labeled = np.hstack([labeled, np.ones((labeled.shape[0], 1))])
        unlabeled = np.hstack([unlabeled, np.ones((unlabeled.shape[0], 1))])
    return Dataset(labeled, labels, unlabeled), truth


@dataclass(frozen=True)
class CsvSchema:
    """Column conventions of a dataset file."""

    label_column: str = "label"
    missing_label_token: str = ""
    delimiter: str = ","
    header: bool = True

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise InvalidInputError("delimiter must be a single character")


def _format_number(value):
    return repr(float(value))


def save_csv(path, data, unlabeled_truth=None, schema=CsvSchema(), intercept=True):
    """Write a dataset (and optional hidden truth) to CSV.

    With ``intercept=True`` the trailing column must be constant ones and
    is dropped, matching the loader's convention of re-appending it.
    """
    features_l = data.labeled_features
    features_u = data.unlabeled_features
    if intercept:
        trailing = np.concatenate([features_l[:, -1], features_u[:, -1]])
        if not np.all(trailing == 1.0):
            raise InvalidInputError("last column is not a constant intercept column")
        features_l = features_l[:, :-1]
        features_u = features_u[:, :-1]
    if unlabeled_truth is not None:
        unlabeled_truth = np.asarray(unlabeled_truth, dtype=float)
        if unlabeled_truth.shape != (data.n_unlabeled,):
            raise DimensionError(
                f"truth has shape {unlabeled_truth.shape}, expected ({data.n_unlabeled},)"
            )

    width = features_l.shape[1]
    header = [f"x{i}" for i in range(width)] + [schema.label_column]
    if unlabeled_truth is not None:
        header.append(TRUE_LABEL_COLUMN)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter=schema.delimiter, lineterminator="\n")
        if schema.header:
            writer.writerow(header)
        for row, label in zip(features_l, data.labels):
            record = [_format_number(v) for v in row] + [_format_number(label)]
            if unlabeled_truth is not None:
                record.append(_format_number(label))
            writer.writerow(record)
        for i, row in enumerate(features_u):
            record = [_format_number(v) for v in row] + [schema.missing_label_token]
            if unlabeled_truth is not None:
                record.append(_format_number(unlabeled_truth[i]))
            writer.writerow(record)


def _parse_label(token, schema, row_number):
    token = token.strip()
    if token == schema.missing_label_token:
        return None
    try:
        value = float(token)
    except ValueError:
        raise SchemaError(
            f"row {row_number}: label {token!r} is neither 0, 1 nor the missing token"
        ) from None
    if value not in (0.0, 1.0):
        raise SchemaError(f"row {row_number}: label value {value} outside {{0, 1}}")
    return value


def load_csv(path, schema=CsvSchema(), ridge=RidgeConfig(), standardize=False):
    """Read a dataset file; returns ``(dataset, unlabeled_truth_or_None)``.

    Rows whose label field equals the missing token become the unlabeled
    block (file order preserved within each block). When a ``true_label``
    column is present its values for the unlabeled rows are returned as
    the hidden ground truth. ``ridge.intercept`` appends a trailing ones
    column; ``standardize`` z-scores features using labeled statistics
    only (constant columns are left untouched).
    """
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle, delimiter=schema.delimiter))
    if not rows:
        raise SchemaError(f"{path}: file is empty")

    if schema.header:
        header = [name.strip() for name in rows[0]]
        body = rows[1:]
        if schema.label_column not in header:
            raise SchemaError(f"{path}: missing label column {schema.label_column!r}")
        label_index = header.index(schema.label_column)
        truth_index = header.index(TRUE_LABEL_COLUMN) if TRUE_LABEL_COLUMN in header else None
    else:
        body = rows
        label_index = len(rows[0]) - 1
        truth_index = None
    width = len(rows[0])
    feature_indices = [
        i for i in range(width) if i != label_index and (truth_index is None or i != truth_index)
    ]
    if not body:
        raise SchemaError(f"{path}: no data rows")

    labeled_rows, labels = [], []
    unlabeled_rows, truth = [], []
    for row_number, row in enumerate(body, start=1):
        if len(row) != width:
            raise ParseError(
                f"row {row_number}: expected {width} fields, found {len(row)}",
                row=row_number,
            )
        features = np.empty(len(feature_indices))
        for j, column in enumerate(feature_indices):
            token = row[column].strip()
            try:
                features[j] = float(token)
            except ValueError:
                raise ParseError(
                    f"row {row_number}, column {column + 1}: cannot parse {token!r} as a number",
                    row=row_number,
                    column=column + 1,
                ) from None
        label = _parse_label(row[label_index], schema, row_number)
        if label is None:
            unlabeled_rows.append(features)
            if truth_index is not None:
                true_token = row[truth_index].strip()
                try:
                    true_value = float(true_token)
                except ValueError:
                    raise SchemaError(
                        f"row {row_number}: true_label {true_token!r} is not a number"
                    ) from None
                if true_value not in (0.0, 1.0):
                    raise SchemaError(
                        f"row {row_number}: true_label value {true_value} outside {{0, 1}}"
                    )
                truth.append(true_value)
        else:
            labeled_rows.append(features)
            labels.append(label)

    if not labeled_rows:
        raise InvalidInputError(f"{path}: no labeled rows")
    labeled = np.array(labeled_rows)
    unlabeled = np.array(unlabeled_rows) if unlabeled_rows else np.empty((0, labeled.shape[1]))

    if standardize:
        labeled, unlabeled = _zscore_blocks(labeled, unlabeled)
    if ridge.intercept:
        labeled = np.hstack([labeled, np.ones((labeled.shape[0], 1))])
        unlabeled = np.hstack([unlabeled, np.ones((unlabeled.shape[0], 1))])

    dataset = Dataset(labeled, np.array(labels), unlabeled)
    unlabeled_truth = np.array(truth) if truth_index is not None else None
    return dataset, unlabeled_truth


def _zscore_blocks(labeled, unlabeled):
    mean = labeled.mean(axis=0)
    sd = labeled.std(axis=0)
    keep = sd == 0.0
    mean = np.where(keep, 0.0, mean)
    sd = np.where(keep, 1.0, sd)
    return (labeled - mean) / sd, (unlabeled - mean) / sd


def zscore(data):
    """Standardized copy of a dataset, using labeled statistics only."""
    labeled, unlabeled = _zscore_blocks(data.labeled_features, data.unlabeled_features)
    return Dataset(labeled, data.labels, unlabeled)


@dataclass(frozen=True)
class Split:
    """A labeled/unlabeled/test partition of a fully labeled dataset."""

    train: Dataset
    unlabeled_truth: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    labeled_indices: np.ndarray
    unlabeled_indices: np.ndarray
    test_indices: np.ndarray
    partition_hash: str

    @property
    def has_test(self):
        return self.test_labels.size > 0


def _hash_partition(*index_arrays):
    digest = hashlib.sha256()
    for indices in index_arrays:
        digest.update(np.asarray(indices, dtype=np.int64).tobytes())
        digest.update(b"|")
    return digest.hexdigest()[:16]


def _require_fully_labeled(data):
    if data.n_unlabeled != 0:
        raise InvalidInputError("expected a fully labeled dataset (no unlabeled block)")


def _build_split(data, labeled_idx, unlabeled_idx, test_idx):
    X = data.labeled_features
    y = data.labels
    train = Dataset(X[labeled_idx], y[labeled_idx], X[unlabeled_idx])
    # Index arrays stay in sampling order so they align with the rows of
    # the pieces; the hash uses sorted copies (partition identity only).
    return Split(
        train=train,
        unlabeled_truth=y[unlabeled_idx],
        test_features=X[test_idx],
        test_labels=y[test_idx],
        labeled_indices=np.asarray(labeled_idx),
        unlabeled_indices=np.asarray(unlabeled_idx),
        test_indices=np.asarray(test_idx),
        partition_hash=_hash_partition(
            np.sort(labeled_idx), np.sort(unlabeled_idx), np.sort(test_idx)
        ),
    )


def split_for_local_optima(data, test_fraction=0.2, unlabel_fraction=0.8, seed=0):
    """Hold out a test fraction, then hide labels from a fraction of the rest.

    Counts use floor rounding for the test and unlabeled parts; whatever
    remains stays labeled. Splits whose labeled part misses a class are
    resampled (up to 100 attempts) before giving up.
    """
    _require_fully_labeled(data)
    if not 0.0 < test_fraction < 1.0 or not 0.0 < unlabel_fraction < 1.0:
        raise InvalidInputError("fractions must lie strictly between 0 and 1")
    total = data.n_labeled
    n_test = int(np.floor(test_fraction * total))
    remaining = total - n_test
    n_unlabeled = int(np.floor(unlabel_fraction * remaining))
    n_labeled = remaining - n_unlabeled
    if n_labeled == 0:
        raise DegenerateSplitError("split leaves no labeled examples")

    rng = derive_rng(seed)
    for _ in range(100):
        order = rng.permutation(total)
        test_idx = order[:n_test]
        unlabeled_idx = order[n_test : n_test + n_unlabeled]
        labeled_idx = order[n_test + n_unlabeled :]
        if np.unique(data.labels[labeled_idx]).size == 2:
            return _build_split(data, labeled_idx, unlabeled_idx, test_idx)
    raise DegenerateSplitError(
        "could not draw a labeled part containing both classes in 100 attempts"
    )


def sample_learning_curve_split(data, labeled_count, unlabeled_count, seed=0):
    """Sample disjoint labeled/unlabeled/test parts without replacement.

    ``labeled_count`` must exceed the feature count so the supervised
    solve is well-defined; the test part is whatever remains and may be
    empty (flagged through ``Split.has_test``).
    """
    _require_fully_labeled(data)
    labeled_count = int(labeled_count)
    unlabeled_count = int(unlabeled_count)
    if labeled_count <= data.n_features:
        raise InvalidInputError(
            f"labeled_count must exceed the feature count ({data.n_features}) "
            "for a well-defined supervised solve"
        )
    if unlabeled_count < 0:
        raise InvalidInputError("unlabeled_count must be nonnegative")
    total = data.n_labeled
    if labeled_count + unlabeled_count > total:
        raise CapacityError(
            f"requested {labeled_count} + {unlabeled_count} examples from {total}"
        )
    rng = derive_rng(seed)
    order = rng.permutation(total)
    labeled_idx = order[:labeled_count]
    unlabeled_idx = order[labeled_count : labeled_count + unlabeled_count]
    test_idx = order[labeled_count + unlabeled_count :]
    return _build_split(data, labeled_idx, unlabeled_idx, test_idx)
