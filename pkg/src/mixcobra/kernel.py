"""Radial kernels on the joint input/prediction displacement space.

A kernel is stored through its profile ``H`` acting on squared norms, so that
``K(z) = scale * H(||z||^2)``. The multiplicative ``scale`` is kept apart from
the profile because it cancels in every normalized weight; the combiners use
the bare profile, which keeps weights bitwise identical under rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

__all__ = [
    "Kernel",
    "Displacement",
    "RegularityReport",
    "gaussian",
    "uniform_ball",
    "epanechnikov_ball",
    "custom",
    "make_kernel",
    "evaluate",
    "check_regularity",
    "KERNEL_NAMES",
]

TAIL_RADIUS = 50.0
TAIL_TOLERANCE = 1e-12


def _gaussian_profile(u):
    return np.exp(-np.asarray(u, dtype=float))


def _uniform_profile(u):
    return (np.asarray(u, dtype=float) <= 1.0).astype(float)


def _epanechnikov_profile(u):
    return np.maximum(0.0, 1.0 - np.asarray(u, dtype=float))


@dataclass(frozen=True)
class Kernel:
    """Radial kernel ``K(z) = scale * profile(||z||^2)``.

    Attributes
    ----------
    kind : str
        One of ``gaussian``, ``epanechnikov-ball``, ``uniform-ball``,
        ``custom-profile``.
    profile : callable
        Vectorized map from squared norms ``u >= 0`` to nonnegative reals.
        Must be nonincreasing on ``[0, inf)``.
    lower_const, lower_radius : float
        Constants ``c`` and ``rho`` such that ``K(z) >= c`` whenever
        ``||z|| <= rho``.
    scale : float
        Positive multiplier. Normalized weights do not depend on it.
    """

    kind: str
    profile: Callable
    lower_const: float
    lower_radius: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.lower_const > 0 and self.lower_radius > 0):
            raise ValueError("kernel regularity constants must be positive")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("kernel scale must be a positive finite number")

    def scaled(self, factor: float) -> "Kernel":
        """Return the same kernel multiplied by ``factor > 0``."""
        if not factor > 0:
            raise ValueError("scaling factor must be positive")
        return replace(
            self,
            scale=self.scale * factor,
            lower_const=self.lower_const * factor,
        )

    def __call__(self, sq_norm):
        return self.scale * self.profile(sq_norm)


@dataclass(frozen=True)
class Displacement:
    """Scaled displacement ``((X_i - x)/alpha, (f(X_i) - f(x))/beta)``."""

    input_part: np.ndarray
    pred_part: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "input_part", np.atleast_1d(np.asarray(self.input_part, dtype=float)))
        object.__setattr__(self, "pred_part", np.atleast_1d(np.asarray(self.pred_part, dtype=float)))

    def squared_norm(self) -> float:
        return float(np.sum(self.input_part**2) + np.sum(self.pred_part**2))


@dataclass(frozen=True)
class RegularityReport:
    lower_bound_holds: bool
    tail_decay_ok: bool

    @property
    def regular(self) -> bool:
        return self.lower_bound_holds and self.tail_decay_ok


def gaussian() -> Kernel:
    # exp(-u) >= exp(-1) on the unit ball
    return Kernel("gaussian", _gaussian_profile, math.exp(-1.0), 1.0)


def uniform_ball() -> Kernel:
    return Kernel("uniform-ball", _uniform_profile, 1.0, 1.0)


def epanechnikov_ball() -> Kernel:
    return Kernel("epanechnikov-ball", _epanechnikov_profile, 0.5, 1.0 / math.sqrt(2.0))


def custom(profile: Callable, lower_const: float, lower_radius: float) -> Kernel:
    return Kernel("custom-profile", profile, lower_const, lower_radius)


_FACTORIES = {
    "gaussian": gaussian,
    "uniform-ball": uniform_ball,
    "uniform": uniform_ball,
    "epanechnikov-ball": epanechnikov_ball,
    "epanechnikov": epanechnikov_ball,
}
KERNEL_NAMES = ("gaussian", "uniform-ball", "epanechnikov-ball")


def make_kernel(name: str) -> Kernel:
    """Build a built-in kernel from its name (as used in config files)."""
    try:
        return _FACTORIES[name.strip().lower()]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; expected one of {KERNEL_NAMES}") from None


def evaluate(kernel: Kernel, disp: Displacement) -> float:
    """Kernel value at a joint displacement."""
    if not (np.all(np.isfinite(disp.input_part)) and np.all(np.isfinite(disp.pred_part))):
        raise ValueError("invalid displacement")
    value = float(kernel(disp.squared_norm()))
    if not (math.isfinite(value) and value >= 0):
        raise ValueError(f"kernel profile returned {value!r}, expected a finite nonnegative value")
    return value


def _uniform_ball_sample(rng, count, dim, radius):
    directions = rng.standard_normal((count, dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = radius * rng.random((count, 1)) ** (1.0 / dim)
    return directions / norms * radii


def check_regularity(kernel: Kernel, dim: int, sample_count: int, seed=0) -> RegularityReport:
    """Numerical check that ``kernel`` is regular in dimension ``dim``.

    The lower bound ``K >= c`` is checked on random points of the ball
    ``B(0, rho)`` together with the origin and points on its boundary. The
    integrability of the radial envelope is replaced by a decay proxy: the
    kernel must drop below ``1e-12`` beyond radius 50.
    """
    if dim < 1 or sample_count < 1:
        raise ValueError("dim and sample_count must be positive")
    rng = np.random.default_rng(seed)
    rho = kernel.lower_radius
    inside = _uniform_ball_sample(rng, sample_count, dim, rho)
    boundary = _uniform_ball_sample(rng, max(1, sample_count // 10), dim, 1.0)
    boundary /= np.maximum(np.linalg.norm(boundary, axis=1, keepdims=True), 1e-300)
    # keep boundary points inside the closed ball despite rounding
    boundary *= rho * (1.0 - 1e-12)
    points = np.vstack([np.zeros((1, dim)), inside, boundary])
    values = kernel(np.sum(points**2, axis=1))
    lower_ok = bool(np.all(values >= kernel.lower_const))

    radii = TAIL_RADIUS * np.array([1.0, 2.0, 4.0, 10.0])
    tail = kernel(radii**2)
    tail_ok = bool(np.all(np.isfinite(tail)) and np.all(tail <= TAIL_TOLERANCE))
    return RegularityReport(lower_bound_holds=lower_ok, tail_decay_ok=tail_ok)
