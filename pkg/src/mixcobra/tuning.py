"""K-fold grid search for the MixCobra (alpha, beta) and Cobra (delta, gamma) parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .combine import (
    CLASSIFICATION,
    CobraParams,
    Dataset,
    DimensionError,
    MachinePredictions,
    MixCobraParams,
    cobra_abs_diff,
    cobra_predict_selected,
    mixcobra_predict_matrix,
    required_agreements,
    squared_distances,
)
from .kernel import Kernel

__all__ = [
    "ParamGrid",
    "TuningResult",
    "kfold_indices",
    "default_mixcobra_grid",
    "default_cobra_grid",
    "cross_validate_mixcobra",
    "cross_validate_cobra",
]

DEFAULT_FOLDS = 5
DEFAULT_GRID_SIZE = 10


def _sorted_unique(values):
    if values is None:
        return None
    arr = np.unique(np.asarray(values, dtype=float))
    return arr


@dataclass(frozen=True, eq=False)
class ParamGrid:
    """Candidate parameter values; duplicates are dropped and values sorted."""

    alpha_values: Optional[Sequence[float]] = None
    beta_values: Optional[Sequence[float]] = None
    delta_values: Optional[Sequence[float]] = None
    gamma_values: Optional[Sequence[float]] = None
    folds: int = DEFAULT_FOLDS

    def __post_init__(self):
        for name in ("alpha_values", "beta_values", "delta_values", "gamma_values"):
            arr = _sorted_unique(getattr(self, name))
            if arr is not None:
                if arr.size == 0:
                    raise ValueError(f"{name} is empty")
                if name == "gamma_values" and not np.all((arr > 0) & (arr <= 1)):
                    raise ValueError("gamma values must lie in (0, 1]")
                elif name == "delta_values" and np.any(arr < 0):
                    raise ValueError("delta values must be nonnegative")
                elif name in ("alpha_values", "beta_values") and np.any(arr <= 0):
                    raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, arr)
        if self.folds < 2:
            raise ValueError("folds must be at least 2")


@dataclass(frozen=True, eq=False)
class TuningResult:
    best_params: object
    cv_error_surface: np.ndarray
    best_error: float
    first_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    second_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    param_names: tuple = ("alpha", "beta")

    def cells(self):
        """Yield ``(first, second, error)`` for every grid cell in row-major order."""
        for i, a in enumerate(self.first_values):
            for j, b in enumerate(self.second_values):
                yield float(a), float(b), float(self.cv_error_surface[i, j])


def kfold_indices(n: int, folds: int, seed) -> list[np.ndarray]:
    """Disjoint validation folds covering ``range(n)``; deterministic given seed."""
    if not 2 <= folds <= n:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, folds)]


def _median_distance(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] < 2 or values.shape[1] == 0:
        return 1.0
    s = float(np.median(pdist(values)))
    return s if s > 0 else 1.0


def default_mixcobra_grid(train: Dataset, train_preds: MachinePredictions,
                          size: int = DEFAULT_GRID_SIZE, folds: int = DEFAULT_FOLDS) -> ParamGrid:
    """Log-spaced alpha and beta over ``[0.01 s, 10 s]``, ``s`` the median pairwise distance."""
    sx = _median_distance(train.features)
    sp = _median_distance(train_preds.values)
    return ParamGrid(
        alpha_values=np.geomspace(0.01 * sx, 10 * sx, size),
        beta_values=np.geomspace(0.01 * sp, 10 * sp, size),
        folds=folds,
    )


def default_cobra_grid(train_preds: MachinePredictions, size: int = DEFAULT_GRID_SIZE,
                       adaptive: bool = True, folds: int = DEFAULT_FOLDS) -> ParamGrid:
    """``size`` evenly spaced delta values up to the widest prediction range and
    gamma in ``{1/p, ..., 1}`` (only 1 when ``adaptive`` is false)."""
    spread = float(np.max(np.ptp(train_preds.values, axis=0))) if train_preds.n else 0.0
    spread = spread if spread > 0 else 1.0
    p = train_preds.p
    gammas = np.arange(1, p + 1) / p if adaptive else np.array([1.0])
    return ParamGrid(delta_values=spread * np.arange(1, size + 1) / size, gamma_values=gammas, folds=folds)


def _check(train: Dataset, train_preds: MachinePredictions, grid: ParamGrid):
    if train.n != train_preds.n:
        raise DimensionError(f"{train.n} training rows but {train_preds.n} prediction rows")
    if not 2 <= grid.folds <= train.n:
        raise ValueError(f"need 2 <= folds <= n, got folds={grid.folds}, n={train.n}")


def _loss(pred, truth, task):
    if task == CLASSIFICATION:
        return np.mean(pred != truth)
    return np.mean((pred - truth) ** 2)


def _argmin(surface, reverse=False):
    """First minimal cell in row-major order (last one when ``reverse``)."""
    best = surface.min()
    hits = np.argwhere(surface == best)
    i, j = hits[-1] if reverse else hits[0]
    return int(i), int(j), float(best)


def cross_validate_mixcobra(train: Dataset, train_preds: MachinePredictions, grid: ParamGrid,
                            kernel: Kernel, seed=0) -> TuningResult:
    """Mean K-fold validation loss for every ``(alpha, beta)`` pair.

    Squared error for regression, 0/1 loss for classification. Ties go to
    the smaller alpha, then the smaller beta.
    """
    _check(train, train_preds, grid)
    if grid.alpha_values is None or grid.beta_values is None:
        raise ValueError("grid needs alpha_values and beta_values")
    alphas, betas = grid.alpha_values, grid.beta_values
    input_sq = squared_distances(train.features, train.features)
    pred_sq = squared_distances(train_preds.values, train_preds.values)
    y = train.targets
    surface = np.zeros((len(alphas), len(betas)))
    folds = kfold_indices(train.n, grid.folds, seed)
    everything = np.arange(train.n)
    for val in folds:
        fit = np.setdiff1d(everything, val, assume_unique=True)
        isq = input_sq[np.ix_(val, fit)]
        psq = pred_sq[np.ix_(val, fit)]
        for i, a in enumerate(alphas):
            for j, b in enumerate(betas):
                pred = mixcobra_predict_matrix(isq, psq, y[fit], MixCobraParams(a, b), kernel, train.task)
                surface[i, j] += _loss(pred, y[val], train.task)
    surface /= len(folds)
    i, j, best = _argmin(surface)
    return TuningResult(MixCobraParams(float(alphas[i]), float(betas[j])), surface, best,
                        alphas, betas, ("alpha", "beta"))


def cross_validate_cobra(train: Dataset, train_preds: MachinePredictions, grid: ParamGrid,
                         seed=0) -> TuningResult:
    """Same search over ``(delta, gamma)``; ties go to the larger delta, then the larger gamma."""
    _check(train, train_preds, grid)
    if grid.delta_values is None or grid.gamma_values is None:
        raise ValueError("grid needs delta_values and gamma_values")
    if train_preds.p < 1:
        raise DimensionError("Cobra needs at least one machine")
    deltas, gammas = grid.delta_values, grid.gamma_values
    p = train_preds.p
    needed = [required_agreements(p, g) for g in gammas]
    diff = cobra_abs_diff(train_preds.values, train_preds.values)
    y = train.targets
    surface = np.zeros((len(deltas), len(gammas)))
    folds = kfold_indices(train.n, grid.folds, seed)
    everything = np.arange(train.n)
    for val in folds:
        fit = np.setdiff1d(everything, val, assume_unique=True)
        block = diff[np.ix_(val, fit)]
        yf = y[fit]
        for i, delta in enumerate(deltas):
            agree = np.sum(block <= delta, axis=2)
            for j, need in enumerate(needed):
                pred = cobra_predict_selected(agree >= need, yf, train.task)
                surface[i, j] += _loss(pred, y[val], train.task)
    surface /= len(folds)
    i, j, best = _argmin(surface, reverse=True)
    return TuningResult(CobraParams(float(deltas[i]), float(gammas[j])), surface, best,
                        deltas, gammas, ("delta", "gamma"))
