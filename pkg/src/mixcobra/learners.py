"""Built-in base machines.

Every machine is fitted by :func:`fit` and predicts in batch through
``machine.predict(X)``. Fitted machines are never mutated after fitting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .combine import CLASSIFICATION, Dataset, DimensionError, MachinePredictions, squared_distances

__all__ = [
    "MachineSpec",
    "parse_machine",
    "FittedMachine",
    "fit",
    "predict",
    "predict_matrix",
    "RIDGE",
]

RIDGE = 1e-8
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class MachineSpec:
    """What to fit: ``kind`` plus the few hyperparameters each kind reads."""

    kind: str
    k: int = 5
    max_depth: Optional[int] = None
    min_leaf: int = 1
    n_trees: int = 50
    bootstrap: bool = True

    @property
    def name(self) -> str:
        if self.kind == "knn":
            return f"knn{self.k}"
        return {"linear": "lm", "logistic": "logit", "tree": "cart", "bagged_trees": "bag"}.get(self.kind, self.kind)


_KINDS = ("knn", "linear", "logistic", "lda", "tree", "bagged_trees", "noise")
_ALIASES = {
    "lm": "linear", "linear": "linear",
    "logit": "logistic", "logistic": "logistic",
    "lda": "lda",
    "cart": "tree", "tree": "tree",
    "bag": "bagged_trees", "bagging": "bagged_trees", "bagged_trees": "bagged_trees",
    "noise": "noise",
    "knn": "knn",
}


def parse_machine(text: str) -> MachineSpec:
    """Parse a machine name such as ``knn5``, ``lm``, ``cart``, ``bag`` or ``noise``.

    ``cart`` is grown with leaves of at least 5 points; the trees inside
    ``bag`` are grown fully.
    """
    token = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([a-z_]+?)(\d*)", token)
    if not m or m.group(1) not in _ALIASES:
        raise ValueError(f"unknown machine {text!r}")
    kind, num = _ALIASES[m.group(1)], m.group(2)
    if kind == "knn":
        return MachineSpec("knn", k=int(num) if num else 5)
    if num:
        raise ValueError(f"machine {text!r} takes no numeric suffix")
    if kind == "tree":
        return MachineSpec("tree", min_leaf=5)
    return MachineSpec(kind)


class FittedMachine:
    """Common surface of fitted machines."""

    def __init__(self, spec: MachineSpec, task: str, d: int):
        self.spec = spec
        self.task = task
        self.d = d

    @property
    def name(self) -> str:
        return self.spec.name

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.d:
            raise DimensionError(f"{self.name} was fitted on d={self.d}, got input of shape {X.shape}")
        return X

    def predict(self, X) -> np.ndarray:
        X = self._check(X)
        out = self._predict(X)
        if self.task == CLASSIFICATION:
            return out.astype(float)
        return out

    def _predict(self, X):
        raise NotImplementedError


class _Constant(FittedMachine):
    def __init__(self, spec, task, d, value):
        super().__init__(spec, task, d)
        self.value = float(value)

    def _predict(self, X):
        return np.full(X.shape[0], self.value)


def _majority(y) -> float:
    ones = np.sum(y == 1)
    return float(ones > len(y) - ones)


class KNN(FittedMachine):
    def __init__(self, spec, task, X, y):
        super().__init__(spec, task, X.shape[1])
        self.X, self.y = X, y
        self.k = min(spec.k, len(y))

    def _predict(self, X):
        dist = squared_distances(X, self.X)
        # stable sort: equal distances resolve to the lowest training index
        nearest = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        labels = self.y[nearest]
        if self.task == CLASSIFICATION:
            ones = labels.sum(axis=1)
            return (ones > self.k - ones).astype(float)
        return labels.mean(axis=1)


def _solve_normal(A, b):
    if np.linalg.cond(A) > _COND_LIMIT:
        A = A + RIDGE * np.eye(A.shape[0])
    return np.linalg.solve(A, b)


def _design(X):
    return np.column_stack([np.ones(X.shape[0]), X])


class Linear(FittedMachine):
    """Ordinary least squares with intercept; labels are thresholded at 1/2."""

    def __init__(self, spec, task, X, y):
        super().__init__(spec, task, X.shape[1])
        D = _design(X)
        self.coef = _solve_normal(D.T @ D, D.T @ y)

    def _predict(self, X):
        out = _design(X) @ self.coef
        if self.task == CLASSIFICATION:
            return (out > 0.5).astype(float)
        return out


class Logistic(FittedMachine):
    """Logistic regression by Newton iterations with a small L2 penalty."""

    penalty = 1e-4
    max_iter = 100
    tol = 1e-10

    def __init__(self, spec, task, X, y):
        super().__init__(spec, task, X.shape[1])
        D = _design(X)
        w = np.zeros(D.shape[1])
        reg = self.penalty * np.eye(D.shape[1])
        reg[0, 0] = 0.0
        for _ in range(self.max_iter):
            prob = expit(D @ w)
            grad = D.T @ (y - prob) - reg @ w
            hess = (D * (prob * (1 - prob))[:, None]).T @ D + reg
            step = _solve_normal(hess, grad)
            w = w + step
            if np.max(np.abs(step)) < self.tol:
                break
        self.coef = w

    def _predict(self, X):
        return (_design(X) @ self.coef > 0).astype(float)


class LDA(FittedMachine):
    """Two-class linear discriminant with pooled covariance."""

    def __init__(self, spec, task, X, y):
        super().__init__(spec, task, X.shape[1])
        X0, X1 = X[y == 0], X[y == 1]
        mu0, mu1 = X0.mean(axis=0), X1.mean(axis=0)
        resid = np.vstack([X0 - mu0, X1 - mu1])
        dof = len(y) - 2 if len(y) > 2 else len(y)
        cov = resid.T @ resid / dof
        direction = _solve_normal(cov, mu1 - mu0)
        self.direction = direction
        self.offset = (-0.5 * (mu1 @ _solve_normal(cov, mu1) - mu0 @ _solve_normal(cov, mu0))
                       + np.log(len(X1) / len(X0)))

    def _predict(self, X):
        return (X @ self.direction + self.offset > 0).astype(float)


class Tree(FittedMachine):
    """CART tree stored as flat arrays.

    Splits minimize the children's summed squared error (regression) or
    weighted Gini impurity (classification). Candidate thresholds are
    midpoints between consecutive distinct values; ``x <= threshold`` goes
    left. Exact ties pick the lowest feature, then the lowest threshold.
    """

    def __init__(self, spec, task, X, y):
        super().__init__(spec, task, X.shape[1])
        feature, threshold, left, right, value = [], [], [], [], []
        stack = [(np.arange(len(y)), 0, -1, False)]
        while stack:
            idx, depth, parent, is_right = stack.pop()
            node = len(feature)
            if parent >= 0:
                (right if is_right else left)[parent] = node
            yn = y[idx]
            value.append(_majority(yn) if task == CLASSIFICATION else float(yn.mean()))
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            if (spec.max_depth is not None and depth >= spec.max_depth) or len(idx) < 2 * spec.min_leaf \
                    or np.all(yn == yn[0]):
                continue
            split = _best_split(X[idx], yn, task, spec.min_leaf)
            if split is None:
                continue
            j, thr = split
            go_left = X[idx, j] <= thr
            feature[node], threshold[node] = j, thr
            # right child pushed first so the left subtree is numbered first
            stack.append((idx[~go_left], depth + 1, node, True))
            stack.append((idx[go_left], depth + 1, node, False))
        self.feature = np.array(feature, dtype=int)
        self.threshold = np.array(threshold)
        self.left = np.array(left, dtype=int)
        self.right = np.array(right, dtype=int)
        self.value = np.array(value)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def _predict(self, X):
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]


def _best_split(X, y, task, min_leaf):
    m, d = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    n_left = np.arange(1, m)[:, None].astype(float)
    n_right = m - n_left
    c_left = np.cumsum(ys, axis=0)[:-1]
    c_right = ys.sum(axis=0) - c_left
    if task == CLASSIFICATION:
        # weighted Gini: sum over children of 2 * ones * zeros / size
        cost = c_left * (n_left - c_left) / n_left + c_right * (n_right - c_right) / n_right
    else:
        # SSE of children up to a constant: -(S_l^2 / n_l + S_r^2 / n_r)
        cost = -(c_left**2 / n_left + c_right**2 / n_right)
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    cost = np.where(valid, cost, np.inf)
    best = cost.min()
    pos, j = np.argwhere(cost.T == best)[0][::-1]
    lo, hi = xs[pos, j], xs[pos + 1, j]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return int(j), float(thr)


class BaggedTrees(FittedMachine):
    """Trees fitted on bootstrap resamples; averaged (regression) or voted."""

    def __init__(self, spec, task, X, y, seed):
        super().__init__(spec, task, X.shape[1])
        tree_spec = MachineSpec("tree", max_depth=spec.max_depth, min_leaf=spec.min_leaf)
        self.trees = []
        for child in np.random.SeedSequence(_seed_entropy(seed)).spawn(spec.n_trees):
            if spec.bootstrap:
                idx = np.random.default_rng(child).integers(0, len(y), len(y))
            else:
                idx = np.arange(len(y))
            self.trees.append(Tree(tree_spec, task, X[idx], y[idx]))

    def _predict(self, X):
        preds = np.stack([t._predict(X) for t in self.trees])
        if self.task == CLASSIFICATION:
            ones = preds.sum(axis=0)
            return (ones > len(self.trees) - ones).astype(float)
        return preds.mean(axis=0)


class Noise(FittedMachine):
    """Pure-noise machine: a seeded function of the input bytes, blind to targets."""

    def __init__(self, spec, task, d, seed):
        super().__init__(spec, task, d)
        self.seed = _seed_entropy(seed)

    def _predict(self, X):
        out = np.empty(X.shape[0])
        for i, row in enumerate(np.ascontiguousarray(X)):
            words = np.frombuffer(row.tobytes(), dtype=np.uint32).tolist()
            rng = np.random.default_rng([self.seed, *words])
            out[i] = rng.integers(0, 2) if self.task == CLASSIFICATION else rng.random()
        return out


def _seed_entropy(seed) -> int:
    if seed is None:
        return 0
    if isinstance(seed, (list, tuple)):
        return int(np.random.SeedSequence(list(seed)).generate_state(1, np.uint64)[0])
    return int(seed)


def fit(kind, train: Dataset, seed=0) -> FittedMachine:
    """Fit a machine of ``kind`` (a :class:`MachineSpec` or a name) on ``train``."""
    spec = parse_machine(kind) if isinstance(kind, str) else kind
    if spec.kind not in _KINDS:
        raise ValueError(f"unknown machine kind {spec.kind!r}")
    X, y, task = train.features, train.targets, train.task
    if spec.kind in ("logistic", "lda") and task != CLASSIFICATION:
        raise ValueError(f"{spec.name} is a classification machine")
    if spec.kind == "knn":
        if spec.k < 1:
            raise ValueError("knn needs k >= 1")
        return KNN(spec, task, X, y)
    if spec.kind == "linear":
        return Linear(spec, task, X, y)
    if spec.kind in ("logistic", "lda"):
        if np.all(y == y[0]):
            return _Constant(spec, task, train.d, y[0])
        return (Logistic if spec.kind == "logistic" else LDA)(spec, task, X, y)
    if spec.kind == "tree":
        return Tree(spec, task, X, y)
    if spec.kind == "bagged_trees":
        return BaggedTrees(spec, task, X, y, seed)
    return Noise(spec, task, train.d, seed)


def predict(machine: FittedMachine, x):
    """Prediction for a single point ``x`` of dimension ``d``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"expected a single d-vector, got shape {x.shape}")
    value = machine.predict(x[None, :])[0]
    return int(value) if machine.task == CLASSIFICATION else float(value)


def predict_matrix(machines: Sequence[FittedMachine], data) -> MachinePredictions:
    """Column ``m`` holds machine ``m``'s predictions on every row of ``data``."""
    if not machines:
        raise ValueError("no machines")
    tasks = {m.task for m in machines}
    dims = {m.d for m in machines}
    if len(tasks) > 1 or len(dims) > 1:
        raise ValueError("machines must share task and input dimension")
    X = data.features if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    names, seen = [], {}
    for m in machines:
        seen[m.name] = seen.get(m.name, 0) + 1
        names.append(m.name if seen[m.name] == 1 else f"{m.name}#{seen[m.name]}")
    cols = [m.predict(X) for m in machines]
    return MachinePredictions(np.column_stack(cols), tuple(names))
