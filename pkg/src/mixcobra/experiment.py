"""Repeated train/test benchmark of base machines and combiners.

One repetition:

1. draw (or reuse) the data and append uniform noise columns if asked;
2. split into a training part and a test part;
3. standardize features with training statistics (regression by default);
4. split the training part again: machines are fitted on the first half,
   the combiners use the second half (sample splitting);
5. tune every combiner by K-fold CV on that second half only;
6. score machines and combiners on the test part (0/1 loss or MSE).

Repetition ``k`` draws all of its randomness from
``SeedSequence([seed, k])``, so running repetitions in parallel or in any
order gives identical tables.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import datagen, learners
from .combine import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    MachinePredictions,
    predict_many,
    split_indices,
)
from .io import load_dataset, load_predictions
from .kernel import make_kernel
from .tuning import (
    ParamGrid,
    cross_validate_cobra,
    cross_validate_mixcobra,
    default_cobra_grid,
    default_mixcobra_grid,
)

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "ErrorTable",
    "run_experiment",
    "run_dimension_sweep",
    "AGGREGATORS",
    "DEFAULT_MACHINES",
]

AGGREGATORS = ("cobra_fixed", "cobra_adaptive", "mixcobra")
DEFAULT_MACHINES = {
    CLASSIFICATION: ("lda", "logit", "knn5", "cart", "bag"),
    REGRESSION: ("lm", "cart", "bag", "knn2", "knn5", "knn10"),
}
DEFAULT_N = {CLASSIFICATION: 200, REGRESSION: 600}
DEFAULT_TRAIN_FRACTION = {CLASSIFICATION: 0.75, REGRESSION: 2 / 3}

# SeedSequence spawn slots of a repetition
_DATA, _INFLATE, _SPLIT, _MACHINE_SPLIT, _MACHINES, _CV = range(6)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a benchmark run needs. ``None`` fields take task defaults."""

    generator: Optional[str] = "circles"
    dataset: Optional[str] = None
    task: Optional[str] = None
    n: Optional[int] = None
    noise_dims: int = 0
    machines: Optional[tuple] = None
    prediction_files: tuple = ()
    aggregators: tuple = AGGREGATORS
    repetitions: int = 20
    train_fraction: Optional[float] = None
    split_fraction: float = 0.5
    folds: int = 5
    grid_size: int = 10
    alpha_values: Optional[tuple] = None
    beta_values: Optional[tuple] = None
    delta_values: Optional[tuple] = None
    gamma_values: Optional[tuple] = None
    kernel: str = "gaussian"
    standardize: Optional[bool] = None
    noise_sd: float = datagen.REGRESSION_NOISE
    seed: int = 0
    parallel: bool = False
    extra_dims: tuple = (0, 5, 10, 15, 20, 25)

    def resolved(self) -> "ExperimentConfig":
        """Copy with defaults filled in and checked."""
        if (self.generator is None) == (self.dataset is None):
            raise ValueError("set exactly one of generator or dataset")
        task = self.task
        if self.generator is not None:
            if self.generator not in datagen.GENERATORS:
                raise ValueError(f"unknown generator {self.generator!r}")
            inferred = REGRESSION if self.generator == "synth_regression" else CLASSIFICATION
            if task is not None and task != inferred:
                raise ValueError(f"generator {self.generator} is a {inferred} problem")
            task = inferred
            if self.prediction_files:
                raise ValueError("prediction files need a fixed dataset, not a generator")
        elif task is None:
            raise ValueError("task is required with a dataset file")
        machines = tuple(self.machines) if self.machines else ()
        if not machines and not self.prediction_files:
            machines = DEFAULT_MACHINES[task]
        for m in machines:
            learners.parse_machine(m)
        unknown = set(self.aggregators) - set(AGGREGATORS)
        if unknown:
            raise ValueError(f"unknown aggregators {sorted(unknown)}")
        cfg = replace(
            self,
            task=task,
            machines=machines,
            n=self.n if self.n is not None else DEFAULT_N[task],
            train_fraction=self.train_fraction if self.train_fraction is not None else DEFAULT_TRAIN_FRACTION[task],
            standardize=self.standardize if self.standardize is not None else task == REGRESSION,
            aggregators=tuple(a for a in AGGREGATORS if a in self.aggregators),
        )
        if cfg.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not 0 < cfg.train_fraction < 1 or not 0 < cfg.split_fraction < 1:
            raise ValueError("train_fraction and split_fraction must lie in (0, 1)")
        if cfg.noise_dims < 0:
            raise ValueError("noise_dims must be nonnegative")
        make_kernel(cfg.kernel)
        return cfg


@dataclass
class ErrorTable:
    """Test errors per machine/aggregator and repetition."""

    base_names: tuple
    aggregator_names: tuple
    errors: dict
    task: str = REGRESSION
    label: str = ""
    dim: int = 0
    cv_records: list = field(default_factory=list)
    selected: list = field(default_factory=list)

    @property
    def names(self) -> tuple:
        return tuple(self.base_names) + tuple(self.aggregator_names)

    @property
    def repetitions(self) -> int:
        return len(next(iter(self.errors.values()))) if self.errors else 0

    def mean(self, name) -> float:
        return math.fsum(self.errors[name]) / len(self.errors[name])

    def std(self, name) -> float:
        """Sample standard deviation (K - 1 denominator); 0 for a single repetition."""
        e = np.asarray(self.errors[name])
        return float(np.std(e, ddof=1)) if len(e) > 1 else 0.0

    def wins(self) -> dict:
        """Repetitions where each base machine has the smallest test error.

        A tie for the minimum splits that repetition equally between the
        tied machines, so the counts add up to the number of repetitions.
        """
        counts = {name: 0.0 for name in self.base_names}
        if not self.base_names:
            return counts
        E = np.array([self.errors[name] for name in self.base_names])
        for k in range(E.shape[1]):
            best = E[:, k] == E[:, k].min()
            share = 1.0 / best.sum()
            for i in np.flatnonzero(best):
                counts[self.base_names[i]] += share
        return counts

    def summary(self) -> str:
        """Plain-text table: mean, std and win count per row."""
        width = max(len(n) for n in self.names) + 2
        head = f"{self.label or 'experiment'}  ({self.task}, K={self.repetitions})"
        lines = [head, f"{'':<{width}}{'mean':>10}{'std':>10}{'wins':>8}"]
        wins = self.wins()
        for name in self.base_names:
            lines.append(f"{name:<{width}}{self.mean(name):>10.4f}{self.std(name):>10.4f}{wins[name]:>8.2f}")
        if self.aggregator_names:
            lines.append("-" * (width + 28))
            for name in self.aggregator_names:
                lines.append(f"{name:<{width}}{self.mean(name):>10.4f}{self.std(name):>10.4f}")
        return "\n".join(lines) + "\n"


@dataclass
class _Fixed:
    """Data shared by all repetitions when the dataset comes from a file."""

    data: Optional[Dataset] = None
    external: Optional[MachinePredictions] = None


def _load_fixed(cfg: ExperimentConfig) -> _Fixed:
    if cfg.dataset is None:
        return _Fixed()
    data = load_dataset(cfg.dataset, cfg.task)
    columns, names = [], []
    for path in cfg.prediction_files:
        preds = load_predictions(path, data.n)
        columns.append(preds.values)
        names.extend(preds.machine_names)
    external = MachinePredictions(np.hstack(columns), tuple(names)) if columns else None
    return _Fixed(data, external)


def _loss(pred, truth, task) -> float:
    if task == CLASSIFICATION:
        return float(np.mean(pred != truth))
    return float(np.mean((pred - truth) ** 2))


def _run_repetition(cfg: ExperimentConfig, fixed: _Fixed, rep: int, extra: int):
    seeds = np.random.SeedSequence([cfg.seed, rep]).spawn(6)
    if fixed.data is None:
        data = datagen.generate(datagen.GeneratorSpec(cfg.generator, cfg.n, seeds[_DATA], 0, cfg.noise_sd))
    else:
        data = fixed.data
    data = datagen.inflate_dims(data, extra, seeds[_INFLATE])

    train_idx, test_idx = split_indices(data.n, cfg.train_fraction, seeds[_SPLIT])
    train, test = data.subset(train_idx), data.subset(test_idx)
    if cfg.standardize:
        train, transform = datagen.standardize(train)
        test = transform.apply(test)
    first, second = split_indices(train.n, cfg.split_fraction, seeds[_MACHINE_SPLIT])
    fit_part, comb_part = train.subset(first), train.subset(second)

    names, comb_cols, test_cols = [], [], []
    machine_seeds = seeds[_MACHINES].spawn(max(1, len(cfg.machines)))
    for spec_text, mseed in zip(cfg.machines, machine_seeds):
        machine = learners.fit(spec_text, fit_part, seed=mseed.generate_state(1)[0])
        names.append(machine.name)
        comb_cols.append(machine.predict(comb_part.features))
        test_cols.append(machine.predict(test.features))
    if fixed.external is not None:
        ext_train = fixed.external.values[train_idx]
        names.extend(fixed.external.machine_names)
        comb_cols.extend(ext_train[second].T)
        test_cols.extend(fixed.external.values[test_idx].T)
    seen = {}
    for i, n in enumerate(names):
        seen[n] = seen.get(n, 0) + 1
        if seen[n] > 1:
            names[i] = f"{n}#{seen[n]}"
    comb_preds = MachinePredictions(np.column_stack(comb_cols), tuple(names))
    test_preds = MachinePredictions(np.column_stack(test_cols), tuple(names))

    errors = {name: _loss(test_preds.values[:, j], test.targets, cfg.task) for j, name in enumerate(names)}
    cv_records, selected = [], []
    kernel = make_kernel(cfg.kernel)
    cv_seed = seeds[_CV]
    for agg in cfg.aggregators:
        if agg == "mixcobra":
            if cfg.alpha_values is None or cfg.beta_values is None:
                auto = default_mixcobra_grid(comb_part, comb_preds, cfg.grid_size, cfg.folds)
            grid = ParamGrid(
                alpha_values=cfg.alpha_values if cfg.alpha_values is not None else auto.alpha_values,
                beta_values=cfg.beta_values if cfg.beta_values is not None else auto.beta_values,
                folds=cfg.folds,
            )
            result = cross_validate_mixcobra(comb_part, comb_preds, grid, kernel, seed=cv_seed)
            pred = predict_many("mixcobra", test.features, test_preds.values, comb_part, comb_preds,
                                result.best_params, kernel)
            chosen = (result.best_params.alpha, result.best_params.beta)
        else:
            adaptive = agg == "cobra_adaptive"
            auto = default_cobra_grid(comb_preds, cfg.grid_size, adaptive, cfg.folds)
            gammas = auto.gamma_values
            if adaptive and cfg.gamma_values is not None:
                gammas = cfg.gamma_values
            grid = ParamGrid(
                delta_values=cfg.delta_values if cfg.delta_values is not None else auto.delta_values,
                gamma_values=gammas,
                folds=cfg.folds,
            )
            result = cross_validate_cobra(comb_part, comb_preds, grid, seed=cv_seed)
            pred = predict_many("cobra", test.features, test_preds.values, comb_part, comb_preds,
                                result.best_params)
            chosen = (result.best_params.delta, result.best_params.gamma)
        errors[agg] = _loss(pred, test.targets, cfg.task)
        n1, n2 = result.param_names
        cv_records.extend((agg, rep, n1, a, n2, b, e) for a, b, e in result.cells())
        selected.append((agg, rep, n1, chosen[0], n2, chosen[1]))
    return tuple(names), errors, cv_records, selected, data.d


def _run_one(args):
    cfg, fixed, rep, extra = args
    try:
        return _run_repetition(cfg, fixed, rep, extra)
    except Exception as exc:
        raise RuntimeError(f"repetition {rep} (extra dims {extra}) failed: {exc}") from exc


def _run(cfg: ExperimentConfig, fixed: _Fixed, extra: int, label: str) -> ErrorTable:
    jobs = [(cfg, fixed, rep, extra) for rep in range(cfg.repetitions)]
    if cfg.parallel and cfg.repetitions > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    base_names = results[0][0]
    errors = {name: [] for name in base_names + cfg.aggregators}
    cv_records, selected = [], []
    for names, errs, records, chosen, _ in results:
        if names != base_names:
            raise RuntimeError("machine names changed between repetitions")
        for name in errors:
            errors[name].append(errs[name])
        cv_records.extend(records)
        selected.extend(chosen)
    dim = results[0][4]
    return ErrorTable(
        base_names=base_names,
        aggregator_names=cfg.aggregators,
        errors={k: np.asarray(v) for k, v in errors.items()},
        task=cfg.task,
        label=label or f"d={dim}",
        dim=dim,
        cv_records=cv_records,
        selected=selected,
    )


def _label(cfg: ExperimentConfig) -> str:
    return cfg.generator if cfg.generator is not None else str(cfg.dataset)


def run_experiment(config: ExperimentConfig) -> ErrorTable:
    """Benchmark every configured machine and aggregator over the repetitions."""
    cfg = config.resolved()
    log.info("running %s: %d repetitions", _label(cfg), cfg.repetitions)
    return _run(cfg, _load_fixed(cfg), cfg.noise_dims, _label(cfg))


def run_dimension_sweep(config: ExperimentConfig, extra_dims=None) -> list[ErrorTable]:
    """One experiment per number of appended noise columns.

    All levels reuse the same per-repetition seeds, so level ``k`` sees the
    same base data and splits as level 0 plus its extra columns.
    """
    cfg = config.resolved()
    if cfg.task != REGRESSION:
        raise ValueError("the dimension sweep expects a regression problem")
    levels = tuple(cfg.extra_dims if extra_dims is None else extra_dims)
    if any(e < 0 for e in levels):
        raise ValueError("extra dimensions must be nonnegative")
    fixed = _load_fixed(cfg)
    tables = []
    for extra in levels:
        log.info("sweep level: %d extra dims", extra)
        table = _run(cfg, fixed, cfg.noise_dims + extra, "")
        tables.append(table)
    return tables
