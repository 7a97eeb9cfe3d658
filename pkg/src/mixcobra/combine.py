"""MixCobra and Cobra combining rules.

Single-query functions (``mixcobra_weights``, ``cobra_predict_class``, ...)
follow the estimator definitions literally and accumulate with
:func:`math.fsum`, which is exactly rounded and therefore independent of the
order of the training rows. The ``*_matrix`` helpers compute the same
quantities for many query points at once from precomputed distance arrays;
they are what the tuning and benchmark code call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .kernel import Kernel

__all__ = [
    "DimensionError",
    "Dataset",
    "MachinePredictions",
    "MixCobraParams",
    "CobraParams",
    "WeightVector",
    "mixcobra_weights",
    "mixcobra_predict_regression",
    "mixcobra_predict_class",
    "cobra_weights",
    "cobra_predict_regression",
    "cobra_predict_class",
    "weighted_mean",
    "required_agreements",
    "split_indices",
    "split_sample",
    "squared_distances",
    "mixcobra_weight_matrix",
    "mixcobra_predict_matrix",
    "cobra_abs_diff",
    "cobra_selection_matrix",
    "cobra_predict_matrix",
    "cobra_predict_selected",
    "predict_many",
]

REGRESSION = "regression"
CLASSIFICATION = "classification"
TASKS = (REGRESSION, CLASSIFICATION)


class DimensionError(ValueError):
    """Shapes of queries, training data and predictions do not line up."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``(n, d)`` and targets for one task."""

    features: np.ndarray
    targets: np.ndarray
    task: str = REGRESSION

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.targets, dtype=float).reshape(-1)
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionError(f"features must be a non-empty (n, d) matrix, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise DimensionError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("dataset contains non-finite values")
        if self.task == CLASSIFICATION:
            if not np.all((y == 0) | (y == 1)):
                raise ValueError("classification targets must be 0 or 1")
        elif np.any(y < 0) or np.any(y > 1):
            raise ValueError("regression targets must lie in [0, 1]")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.targets[idx], self.task)


@dataclass(frozen=True, eq=False)
class MachinePredictions:
    """Outputs of ``p`` base machines on ``n`` rows.

    ``p = 0`` is allowed; MixCobra then reduces to plain kernel regression
    on the inputs.
    """

    values: np.ndarray
    machine_names: tuple = ()

    def __post_init__(self):
        V = np.asarray(self.values, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if V.ndim != 2:
            raise DimensionError(f"predictions must be an (n, p) matrix, got shape {V.shape}")
        if not np.all(np.isfinite(V)):
            raise ValueError("predictions contain non-finite values")
        names = tuple(self.machine_names) or tuple(f"m{j + 1}" for j in range(V.shape[1]))
        if len(names) != V.shape[1]:
            raise DimensionError(f"{len(names)} machine names for {V.shape[1]} columns")
        if len(set(names)) != len(names):
            raise ValueError("machine names must be unique")
        V.setflags(write=False)
        object.__setattr__(self, "values", V)
        object.__setattr__(self, "machine_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def subset(self, idx) -> "MachinePredictions":
        return MachinePredictions(self.values[np.asarray(idx)], self.machine_names)


@dataclass(frozen=True)
class MixCobraParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")


@dataclass(frozen=True)
class CobraParams:
    delta: float
    gamma: float = 1.0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("delta must be nonnegative")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class WeightVector:
    weights: np.ndarray
    degenerate: bool = False

    def __len__(self):
        return len(self.weights)


def _normalize(raw: np.ndarray) -> WeightVector:
    total = math.fsum(raw)
    if total == 0.0:
        return WeightVector(np.zeros_like(raw), degenerate=True)
    return WeightVector(raw / total, degenerate=False)


def weighted_mean(weights: WeightVector, targets) -> float:
    """``sum_i W_i Y_i`` with an exactly rounded sum (0 for degenerate weights)."""
    return math.fsum(weights.weights * np.asarray(targets, dtype=float))


def _check_query(query_x, query_preds, train: Dataset, train_preds: MachinePredictions):
    x = np.atleast_1d(np.asarray(query_x, dtype=float))
    f = np.atleast_1d(np.asarray(query_preds, dtype=float)).reshape(-1)
    if train.n != train_preds.n:
        raise DimensionError(f"{train.n} training rows but {train_preds.n} prediction rows")
    if x.shape != (train.d,):
        raise DimensionError(f"query has shape {x.shape}, expected ({train.d},)")
    if f.shape != (train_preds.p,):
        raise DimensionError(f"query predictions have length {f.size}, expected {train_preds.p}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(f))):
        raise ValueError("query contains non-finite values")
    return x, f


def _gaussian_shift(kernel: Kernel, sq_norms: np.ndarray, axis=None):
    # exp(-(u - u_min)) has the same normalized weights as exp(-u) and cannot
    # underflow to an all-zero row
    if kernel.kind == "gaussian" and sq_norms.size:
        return sq_norms - np.min(sq_norms, axis=axis, keepdims=axis is not None)
    return sq_norms


def mixcobra_weights(query_x, query_preds, train: Dataset, train_preds: MachinePredictions,
                     params: MixCobraParams, kernel: Kernel) -> WeightVector:
    """Normalized MixCobra weights of the training points for one query.

    Raw weight ``i`` is ``H(||(X_i - x)/alpha||^2 + ||(f(X_i) - f(x))/beta||^2)``.
    """
    x, f = _check_query(query_x, query_preds, train, train_preds)
    dx = (train.features - x) / params.alpha
    dp = (train_preds.values - f) / params.beta
    u = np.sum(dx * dx, axis=1) + np.sum(dp * dp, axis=1)
    raw = np.asarray(kernel.profile(_gaussian_shift(kernel, u)), dtype=float)
    return _normalize(raw)


def mixcobra_predict_regression(query_x, query_preds, train: Dataset, train_preds: MachinePredictions,
                                params: MixCobraParams, kernel: Kernel) -> float:
    w = mixcobra_weights(query_x, query_preds, train, train_preds, params, kernel)
    if w.degenerate:
        return math.fsum(train.targets) / train.n
    return weighted_mean(w, train.targets)


def mixcobra_predict_class(query_x, query_preds, train: Dataset, train_preds: MachinePredictions,
                           params: MixCobraParams, kernel: Kernel) -> int:
    """Label 1 iff the kernel mass of class 1 strictly exceeds that of class 0."""
    w = mixcobra_weights(query_x, query_preds, train, train_preds, params, kernel)
    return int(weighted_mean(w, train.targets) > 0.5)


def required_agreements(p: int, gamma: float) -> int:
    """Smallest machine count ``k`` with ``k >= p * gamma``."""
    # guards against p * gamma landing a hair above an integer
    return max(1, math.ceil(p * gamma - 1e-9))


def _cobra_selected(query_preds, train_preds: MachinePredictions, params: CobraParams) -> np.ndarray:
    f = np.atleast_1d(np.asarray(query_preds, dtype=float)).reshape(-1)
    if train_preds.p < 1:
        raise DimensionError("Cobra needs at least one machine")
    if f.shape != (train_preds.p,):
        raise DimensionError(f"query predictions have length {f.size}, expected {train_preds.p}")
    if not np.all(np.isfinite(f)):
        raise ValueError("query contains non-finite values")
    agree = np.sum(np.abs(f - train_preds.values) <= params.delta, axis=1)
    return agree >= required_agreements(train_preds.p, params.gamma)


def cobra_weights(query_preds, train_preds: MachinePredictions, params: CobraParams) -> WeightVector:
    """Uniform weights over the training points selected by the consensus rule."""
    selected = _cobra_selected(query_preds, train_preds, params)
    return _normalize(selected.astype(float))


def cobra_predict_regression(query_preds, train: Dataset, train_preds: MachinePredictions,
                             params: CobraParams) -> float:
    if train.n != train_preds.n:
        raise DimensionError(f"{train.n} training rows but {train_preds.n} prediction rows")
    w = cobra_weights(query_preds, train_preds, params)
    if w.degenerate:
        return math.fsum(train.targets) / train.n
    return weighted_mean(w, train.targets)


def cobra_predict_class(query_preds, train: Dataset, train_preds: MachinePredictions,
                        params: CobraParams) -> int:
    if train.n != train_preds.n:
        raise DimensionError(f"{train.n} training rows but {train_preds.n} prediction rows")
    selected = _cobra_selected(query_preds, train_preds, params)
    ones = int(np.sum(train.targets[selected] == 1))
    zeros = int(np.sum(selected)) - ones
    return int(ones > zeros)


def split_indices(n: int, fraction: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """Shuffled disjoint index partition; first part has ``round(fraction * n)``
    rows clamped to ``[1, n - 1]``."""
    if n < 2:
        raise ValueError("need at least two rows to split")
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    size = min(max(int(round(fraction * n)), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:size], perm[size:]


def split_sample(data: Dataset, fraction: float, seed) -> tuple[Dataset, Dataset]:
    first, second = split_indices(data.n, fraction, seed)
    return data.subset(first), data.subset(second)


# ---------------------------------------------------------------------------
# Batch forms


def squared_distances(A, B) -> np.ndarray:
    """Matrix of squared Euclidean distances between rows of ``A`` and ``B``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], B.shape[0]))
    return cdist(A, B, "sqeuclidean")


def mixcobra_weight_matrix(input_sq: np.ndarray, pred_sq: np.ndarray,
                           params: MixCobraParams, kernel: Kernel):
    """Row-normalized weights from squared input and prediction distances.

    Returns ``(W, degenerate)`` where ``W`` has one row per query and
    ``degenerate`` flags rows whose raw weights are all zero.
    """
    u = input_sq / params.alpha**2 + pred_sq / params.beta**2
    raw = np.asarray(kernel.profile(_gaussian_shift(kernel, u, axis=1)), dtype=float)
    totals = raw.sum(axis=1)
    degenerate = totals == 0.0
    safe = np.where(degenerate, 1.0, totals)
    return raw / safe[:, None], degenerate


def mixcobra_predict_matrix(input_sq, pred_sq, train_targets, params: MixCobraParams,
                            kernel: Kernel, task: str = REGRESSION) -> np.ndarray:
    W, degenerate = mixcobra_weight_matrix(input_sq, pred_sq, params, kernel)
    y = np.asarray(train_targets, dtype=float)
    est = (W * y).sum(axis=1)
    if task == CLASSIFICATION:
        return (est > 0.5).astype(float)
    return np.where(degenerate, y.mean(), est)


def cobra_selection_matrix(abs_diff: np.ndarray, params: CobraParams) -> np.ndarray:
    """Boolean ``(m, n)`` selection from ``|f_k(x_q) - f_k(X_i)|`` of shape ``(m, n, p)``."""
    agree = np.sum(abs_diff <= params.delta, axis=2)
    return agree >= required_agreements(abs_diff.shape[2], params.gamma)


def cobra_abs_diff(query_preds, train_preds) -> np.ndarray:
    Q = np.asarray(query_preds, dtype=float)
    T = np.asarray(train_preds, dtype=float)
    return np.abs(Q[:, None, :] - T[None, :, :])


def cobra_predict_matrix(abs_diff, train_targets, params: CobraParams,
                         task: str = REGRESSION) -> np.ndarray:
    return cobra_predict_selected(cobra_selection_matrix(abs_diff, params), train_targets, task)


def cobra_predict_selected(sel: np.ndarray, train_targets, task: str = REGRESSION) -> np.ndarray:
    """Cobra outputs from a boolean ``(m, n)`` selection of training points."""
    y = np.asarray(train_targets, dtype=float)
    counts = sel.sum(axis=1)
    if task == CLASSIFICATION:
        ones = (sel & (y == 1)).sum(axis=1)
        return (ones > counts - ones).astype(float)
    sums = (sel * y).sum(axis=1)
    return np.where(counts == 0, y.mean(), sums / np.maximum(counts, 1))


def predict_many(method: str, query_x, query_preds, train: Dataset, train_preds: MachinePredictions,
                 params, kernel: Kernel | None = None) -> np.ndarray:
    """Batch prediction for ``method`` in ``{"mixcobra", "cobra"}``."""
    if method == "mixcobra":
        input_sq = squared_distances(query_x, train.features)
        pred_sq = squared_distances(query_preds, train_preds.values)
        return mixcobra_predict_matrix(input_sq, pred_sq, train.targets, params, kernel, train.task)
    if method == "cobra":
        diff = cobra_abs_diff(query_preds, train_preds.values)
        return cobra_predict_matrix(diff, train.targets, params, train.task)
    raise ValueError(f"unknown method {method!r}")

