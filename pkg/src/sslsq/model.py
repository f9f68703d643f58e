"""Core data model: datasets, the ridge solve, objectives and gradients.

The classifier is linear with class targets encoded as {0, 1}; a point is
assigned class 1 when its decision value exceeds 1/2. Two semi-supervised
objectives extend the supervised squared loss. ``label_objective`` treats
the missing labels as free variables ``u`` in [0, 1] and fits them like
known targets. ``responsibility_objective`` instead carries a weight
``q`` in [0, 1] per unlabeled point that splits its loss between the two
class targets; it is linear in ``q``, so its per-point optimum always sits
at a vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError

__all__ = [
    "ClassEncoding",
    "Dataset",
    "RidgeConfig",
    "classify",
    "decision_values",
    "grad_label_objective_u",
    "grad_label_objective_w",
    "grad_responsibility_objective_q",
    "grad_responsibility_objective_w",
    "label_objective",
    "responsibility_objective",
    "ridge_solve",
    "supervised_objective",
]


def _as_float_array(value, name, ndim):
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_lam(lam):
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0.0:
        raise InvalidInputError(f"ridge penalty must be a finite nonnegative real, got {lam}")
    return lam


@dataclass(frozen=True)
class Dataset:
    """Feature matrices for the labeled and unlabeled blocks.

    ``labeled_features`` is (L, d) with L >= 1, ``labels`` is (L,) with
    entries exactly 0 or 1, and ``unlabeled_features`` is (U, d) with
    U >= 0 (``None`` means an empty block). Both blocks share the column
    count d; an intercept, when used, is an ordinary constant-ones column
    (by convention the last one). Instances are immutable; the wrapped
    arrays are copies with the writeable flag cleared.
    """

    labeled_features: np.ndarray
    labels: np.ndarray
    unlabeled_features: np.ndarray | None = None

    def __post_init__(self):
        features = _as_float_array(self.labeled_features, "labeled_features", 2)
        labels = _as_float_array(self.labels, "labels", 1)
        if self.unlabeled_features is None:
            unlabeled = np.empty((0, features.shape[1]))
            unlabeled.setflags(write=False)
        else:
            unlabeled = _as_float_array(self.unlabeled_features, "unlabeled_features", 2)
        if features.shape[0] < 1:
            raise InvalidInputError("need at least one labeled example")
        if labels.shape[0] != features.shape[0]:
            raise DimensionError(
                f"{labels.shape[0]} labels for {features.shape[0]} labeled rows"
            )
        if unlabeled.shape[1] != features.shape[1]:
            raise DimensionError(
                "labeled and unlabeled blocks disagree on column count: "
                f"{features.shape[1]} vs {unlabeled.shape[1]}"
            )
        if labels.size and np.any((labels != 0.0) & (labels != 1.0)):
            raise InvalidInputError("labels must be exactly 0 or 1")
        object.__setattr__(self, "labeled_features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "unlabeled_features", unlabeled)

    @property
    def n_labeled(self):
        return self.labeled_features.shape[0]

    @property
    def n_unlabeled(self):
        return self.unlabeled_features.shape[0]

    @property
    def n_features(self):
        return self.labeled_features.shape[1]

    @property
    def extended_features(self):
        """Row concatenation of the labeled and unlabeled blocks."""
        return np.vstack([self.labeled_features, self.unlabeled_features])

    def extended_targets(self, imputed):
        """Concatenate the known labels with imputed targets for the unlabeled block."""
        imputed = np.asarray(imputed, dtype=float)
        if imputed.shape != (self.n_unlabeled,):
            raise DimensionError(
                f"imputed labels have shape {imputed.shape}, expected ({self.n_unlabeled},)"
            )
        return np.concatenate([self.labels, imputed])


@dataclass(frozen=True)
class ClassEncoding:
    """Numeric codes for the two classes; defaults to 1 and 0."""

    positive_code: float = 1.0
    negative_code: float = 0.0

    def __post_init__(self):
        if self.positive_code == self.negative_code:
            raise InvalidInputError("class codes must differ")

    @property
    def threshold(self):
        """Decision value at which both class targets incur equal loss."""
        return 0.5 * (self.positive_code + self.negative_code)


@dataclass(frozen=True)
class RidgeConfig:
    """Ridge penalty and intercept convention for solves and loaders."""

    lam: float = 0.0
    intercept: bool = True

    def __post_init__(self):
        _check_lam(self.lam)


def _check_weights(data, w):
    w = np.asarray(w, dtype=float)
    if w.shape != (data.n_features,):
        raise DimensionError(
            f"weights have shape {w.shape}, expected ({data.n_features},)"
        )
    return w


def ridge_solve(features, targets, lam=0.0, *, penalize_intercept=True):
    """Minimizer of ``||X w - t||^2 + lam * ||w||^2``.

    Parameters
    ----------
    features : (N, d) array
    targets : (N,) array
    lam : nonnegative float
        Ridge penalty. With ``lam == 0`` the solve goes through a
        rank-revealing least-squares factorization and returns the
        minimum-norm solution, so rank-deficient systems are accepted.
    penalize_intercept : bool
        When False the last column is treated as the intercept and its
        coefficient is excluded from the penalty. The default penalizes
        every coefficient.

    Returns
    -------
    (d,) weight array.
    """
    X = _as_float_array(features, "features", 2)
    t = _as_float_array(targets, "targets", 1)
    if X.shape[0] < 1:
        raise InvalidInputError("need at least one row to solve")
    if t.shape[0] != X.shape[0]:
        raise DimensionError(f"{t.shape[0]} targets for {X.shape[0]} rows")
    lam = _check_lam(lam)
    if lam > 0.0:
        # Augmented rows turn the penalty into ordinary squared error, so
        # one factorization covers both the regularized and the
        # unregularized (minimum-norm) case.
        penalty = np.full(X.shape[1], np.sqrt(lam))
        if not penalize_intercept:
            penalty[-1] = 0.0
        X = np.vstack([X, np.diag(penalty)])
        t = np.concatenate([t, np.zeros(X.shape[1])])
    solution, *_ = np.linalg.lstsq(X, t, rcond=None)
    return solution


def decision_values(features, w):
    """Inner product of every feature row with the weight vector."""
    X = _as_float_array(features, "features", 2)
    w = np.asarray(w, dtype=float)
    if w.shape != (X.shape[1],):
        raise DimensionError(f"weights have shape {w.shape}, expected ({X.shape[1]},)")
    return X @ w


def classify(values):
    """Threshold decision values at 1/2: strictly above maps to class 1.

    A value of exactly 0.5 maps to class 0.
    """
    values = np.asarray(values, dtype=float)
    if values.size and not np.all(np.isfinite(values)):
        raise InvalidInputError("decision values contain non-finite entries")
    return (values > 0.5).astype(float)


def supervised_objective(data, w, lam=0.0):
    """Squared error on the labeled block plus the ridge penalty."""
    w = _check_weights(data, w)
    lam = _check_lam(lam)
    residual = data.labeled_features @ w - data.labels
    return float(residual @ residual + lam * (w @ w))


def label_objective(data, w, u, lam=0.0):
    """Squared error over both blocks with imputed targets ``u`` for the unlabeled one."""
    w = _check_weights(data, w)
    lam = _check_lam(lam)
    residual = data.extended_features @ w - data.extended_targets(u)
    return float(residual @ residual + lam * (w @ w))


def _check_responsibilities(data, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (data.n_unlabeled,):
        raise DimensionError(
            f"responsibilities have shape {q.shape}, expected ({data.n_unlabeled},)"
        )
    if q.size and (np.any(q < 0.0) or np.any(q > 1.0)):
        raise InvalidInputError("responsibilities must lie in [0, 1]")
    return q


def responsibility_objective(data, w, q, encoding=ClassEncoding(), lam=0.0):
    """Labeled squared error plus a q-weighted mix of the two class losses.

    Each unlabeled point contributes ``q * (s - m)^2 + (1 - q) * (s - n)^2``
    where ``s`` is its decision value and ``(m, n)`` are the class codes.
    For binary ``q`` this equals ``label_objective`` with ``u = q``.
    """
    w = _check_weights(data, w)
    q = _check_responsibilities(data, q)
    lam = _check_lam(lam)
    residual = data.labeled_features @ w - data.labels
    total = residual @ residual + lam * (w @ w)
    if data.n_unlabeled:
        s = data.unlabeled_features @ w
        m, n = encoding.positive_code, encoding.negative_code
        total = total + np.sum(q * (s - m) ** 2 + (1.0 - q) * (s - n) ** 2)
    return float(total)


def grad_label_objective_u(data, w, u):
    """Gradient of ``label_objective`` in the imputed labels: ``-2 (X_u w - u)``."""
    w = _check_weights(data, w)
    u = np.asarray(u, dtype=float)
    if u.shape != (data.n_unlabeled,):
        raise DimensionError(f"imputed labels have shape {u.shape}, expected ({data.n_unlabeled},)")
    return -2.0 * (data.unlabeled_features @ w - u)


def grad_label_objective_w(data, w, u, lam=0.0):
    """Gradient of ``label_objective`` in the weights."""
    w = _check_weights(data, w)
    lam = _check_lam(lam)
    extended = data.extended_features
    residual = extended @ w - data.extended_targets(u)
    return 2.0 * (extended.T @ residual) + 2.0 * lam * w


def grad_responsibility_objective_q(data, w, encoding=ClassEncoding()):
    """Per-point gradient of ``responsibility_objective`` in ``q``.

    The objective is linear in ``q``; entry i equals
    ``m^2 - n^2 - 2 (m - n) x_i.w``, which under (1, 0) encoding reduces
    to ``-2 (x_i.w - 0.5)``.
    """
    w = _check_weights(data, w)
    m, n = encoding.positive_code, encoding.negative_code
    s = data.unlabeled_features @ w
    return (m * m - n * n) - 2.0 * (m - n) * s


def grad_responsibility_objective_w(data, w, q, encoding=ClassEncoding(), lam=0.0):
    """Gradient of ``responsibility_objective`` in the weights.

    The unlabeled pull enters through the per-point target
    ``q (m - n) + n``, applied via the transposed unlabeled design matrix.
    """
    w = _check_weights(data, w)
    q = _check_responsibilities(data, q)
    lam = _check_lam(lam)
    extended = data.extended_features
    m, n = encoding.positive_code, encoding.negative_code
    pulled = n + q * (m - n)
    return (
        2.0 * (extended.T @ (extended @ w))
        - 2.0 * (data.labeled_features.T @ data.labels)
        - 2.0 * (data.unlabeled_features.T @ pulled)
        + 2.0 * lam * w
    )
