"""Simulated benchmark data.

Six two-class examples in the plane (``gauss``, ``comete``, ``nuclear``,
``spot``, ``circles``, ``spirals``), a bounded regression problem
(``synth_regression``), the uniform noise-feature inflation used for the
dimension study, and column standardization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .combine import CLASSIFICATION, REGRESSION, Dataset

__all__ = [
    "GeneratorSpec",
    "GENERATORS",
    "CLASSIFICATION_GENERATORS",
    "generate",
    "inflate_dims",
    "standardize",
    "Standardizer",
    "synth_regression_function",
    "synth_regression_target",
    "SPOT_CENTERS",
]

CLASSIFICATION_GENERATORS = ("gauss", "comete", "nuclear", "spot", "circles", "spirals")
GENERATORS = CLASSIFICATION_GENERATORS + ("synth_regression",)

SPOT_CENTERS = np.array([[0.2, 0.2], [0.8, 0.3], [0.5, 0.5], [0.3, 0.8], [0.7, 0.7]])
SPOT_SD = 0.05
CIRCLE_RADII = (1.0, 2.0)
CIRCLE_JITTER = 0.1
SPIRAL_THETA = (0.5 * math.pi, 3.0 * math.pi)
SPIRAL_JITTER = 0.05
REGRESSION_DIM = 6
REGRESSION_NOISE = 0.1
# analytic range of synth_regression_function on [0, 1]^6
_REG_LO, _REG_HI = -1.0, 6.0


@dataclass(frozen=True)
class GeneratorSpec:
    """Which dataset to draw.

    ``noise_sd`` only affects ``synth_regression`` (0 gives noiseless
    targets equal to the regression function).
    """

    name: str
    n: int
    seed: int = 0
    noise_dims: int = 0
    noise_sd: float = REGRESSION_NOISE


def synth_regression_function(X) -> np.ndarray:
    """Raw regression function, a sine term plus a product term plus a linear term.

    ``sin(2 pi x1) + 2 x2 x3 + x4 + x5 + x6``, with range ``[-1, 6]`` on the
    unit cube. Extra columns beyond the sixth are ignored.
    """
    X = np.asarray(X, dtype=float)
    return np.sin(2 * np.pi * X[:, 0]) + 2 * X[:, 1] * X[:, 2] + X[:, 3] + X[:, 4] + X[:, 5]


def synth_regression_target(X) -> np.ndarray:
    """Noiseless target: the regression function mapped affinely onto [0, 1]."""
    return (synth_regression_function(X) - _REG_LO) / (_REG_HI - _REG_LO)


def _gaussian(rng, mean, cov, size):
    return rng.multivariate_normal(mean, cov, size=size, method="cholesky")


def _unit_disk(rng, size):
    radius = np.sqrt(rng.random(size))
    angle = rng.uniform(0, 2 * np.pi, size)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def _ring(rng, radius, size):
    angle = rng.uniform(0, 2 * np.pi, size)
    r = radius + CIRCLE_JITTER * rng.standard_normal(size)
    return np.column_stack([r * np.cos(angle), r * np.sin(angle)])


def _spiral(rng, size, rotate):
    theta = rng.uniform(*SPIRAL_THETA, size)
    r = theta / (2 * np.pi)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    if rotate:
        pts = -pts
    return pts + SPIRAL_JITTER * rng.standard_normal((size, 2))


def _two_classes(name, rng, half):
    if name == "gauss":
        a = _gaussian(rng, [0, 2], [[1, -0.5], [-0.5, 1]], half)
        b = _gaussian(rng, [-1, 2], [[1, 0.5], [0.5, 1]], half)
    elif name == "comete":
        a = _gaussian(rng, [0, 2], [[3, 9 / 4], [9 / 4, 15]], half)
        b = _gaussian(rng, [0, 2], np.eye(2), half)
    elif name == "nuclear":
        a = _unit_disk(rng, half)
        b = _gaussian(rng, [0.5, 0.5], 0.1 * np.eye(2), half)
    elif name == "spot":
        a = rng.uniform(-1, 1, (half, 2))
        comp = rng.integers(0, len(SPOT_CENTERS), half)
        b = SPOT_CENTERS[comp] + SPOT_SD * rng.standard_normal((half, 2))
    elif name == "circles":
        a = _ring(rng, CIRCLE_RADII[0], half)
        b = _ring(rng, CIRCLE_RADII[1], half)
    else:
        a = _spiral(rng, half, rotate=False)
        b = _spiral(rng, half, rotate=True)
    return a, b


def generate(spec: GeneratorSpec) -> Dataset:
    """Draw the dataset described by ``spec``; deterministic given the seed.

    Classification examples put the first ``n/2`` rows in class 0 and the
    rest in class 1. ``noise_dims`` uniform columns are appended last.
    """
    if spec.name not in GENERATORS:
        raise ValueError(f"unknown generator {spec.name!r}; expected one of {GENERATORS}")
    if spec.n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(spec.seed)
    if spec.name == "synth_regression":
        X = rng.random((spec.n, REGRESSION_DIM))
        f = synth_regression_function(X) + spec.noise_sd * rng.standard_normal(spec.n)
        y = np.clip((f - _REG_LO) / (_REG_HI - _REG_LO), 0.0, 1.0)
        data = Dataset(X, y, REGRESSION)
    else:
        if spec.n % 2:
            raise ValueError("classification examples need an even n")
        half = spec.n // 2
        a, b = _two_classes(spec.name, rng, half)
        data = Dataset(np.vstack([a, b]), np.repeat([0.0, 1.0], half), CLASSIFICATION)
    if spec.noise_dims:
        data = inflate_dims(data, spec.noise_dims, rng)
    return data


def inflate_dims(data: Dataset, extra: int, seed) -> Dataset:
    """Append ``extra`` columns of i.i.d. Uniform[0, 1] draws."""
    if extra < 0:
        raise ValueError("extra must be nonnegative")
    if extra == 0:
        return data
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise = rng.random((data.n, extra))
    return Dataset(np.hstack([data.features, noise]), data.targets, data.task)


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Recorded per-column affine map ``(x - mean) / std``."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, data: Dataset) -> Dataset:
        return Dataset((data.features - self.mean) / self.std, data.targets, data.task)


def standardize(data: Dataset) -> tuple[Dataset, Standardizer]:
    """Zero-mean, unit-variance columns (population std).

    Constant columns are passed through unchanged (recorded mean 0, std 1).
    """
    mean = data.features.mean(axis=0)
    std = data.features.std(axis=0)
    constant = np.ptp(data.features, axis=0) == 0
    mean = np.where(constant, 0.0, mean)
    std = np.where(constant, 1.0, std)
    transform = Standardizer(mean, std)
    return transform.apply(data), transform
