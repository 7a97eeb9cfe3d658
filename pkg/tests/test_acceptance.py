"""Acceptance criteria, each run at its stated tolerance.

Every test appends one ``PASS``/``FAIL`` line to ``RESULTS``; the lines are
echoed by the terminal summary hook in ``conftest.py`` and printed directly
when run with ``-s``.
"""

import filecmp
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from mixcobra import kernel as K
from mixcobra.cli import main
from mixcobra.combine import (
    REGRESSION,
    CobraParams,
    Dataset,
    MachinePredictions,
    MixCobraParams,
    cobra_weights,
    mixcobra_predict_regression,
    mixcobra_weights,
    predict_many,
)
from mixcobra.datagen import synth_regression_target
from mixcobra.experiment import ExperimentConfig, run_dimension_sweep, run_experiment
from mixcobra.tuning import ParamGrid, cross_validate_mixcobra, default_mixcobra_grid

RESULTS = []


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _elapsed(start):
    return time.perf_counter() - start


# 1 -------------------------------------------------------------------------

def test_criterion_1_weight_laws():
    start = time.perf_counter()
    rng = np.random.default_rng(20240601)
    kernels = [K.gaussian(), K.epanechnikov_ball(), K.uniform_ball()]
    problems = []
    for case in range(10_000):
        n, d, p = int(rng.integers(1, 11)), int(rng.integers(1, 4)), int(rng.integers(0, 4))
        X, y, P = rng.random((n, d)), rng.random(n), rng.random((n, p))
        train, preds = Dataset(X, y, REGRESSION), MachinePredictions(P, tuple(f"m{j}" for j in range(p)))
        x, f = rng.random(d), rng.random(p)
        kern = kernels[case % 3]
        params = MixCobraParams(float(rng.uniform(0.05, 3)), float(rng.uniform(0.05, 3)))
        perm = rng.permutation(n)
        factor = float(np.exp(rng.uniform(-5, 5)))

        w = mixcobra_weights(x, f, train, preds, params, kern)
        vectors = [(w, mixcobra_weights(x, f, train, preds, params, kern.scaled(factor)),
                    mixcobra_weights(x, f, train.subset(perm), preds.subset(perm), params, kern))]
        if p:
            cp = CobraParams(float(rng.uniform(0, 0.6)), float(rng.choice([1 / 3, 2 / 3, 1.0])))
            c = cobra_weights(f, preds, cp)
            vectors.append((c, c, cobra_weights(f, preds.subset(perm), cp)))
        for base, scaled, permuted in vectors:
            if not base.degenerate and abs(math.fsum(base.weights) - 1) > 1e-12:
                problems.append((case, "sum"))
            if np.any(base.weights < 0) or (base.degenerate and np.any(base.weights != 0)):
                problems.append((case, "sign"))
            if not np.array_equal(scaled.weights, base.weights):
                problems.append((case, "scale"))
            if not np.array_equal(permuted.weights, base.weights[perm]):
                problems.append((case, "permutation"))
    seconds = _elapsed(start)
    report(1, not problems and seconds < 10, f"10000 cases, {len(problems)} violations, {seconds:.1f}s (limit 10s)")


# 2 -------------------------------------------------------------------------

def _brute_cobra(q, rows, delta, gamma):
    p = len(q)
    need = math.ceil(p * gamma - 1e-9)
    raw = []
    for row in rows:
        agree = 0
        for m in range(p):
            if abs(float(q[m]) - float(row[m])) <= delta:
                agree += 1
        raw.append(1.0 if agree >= need else 0.0)
    total = sum(raw)
    return [r / total for r in raw] if total else [0.0] * len(rows)


def test_criterion_2_cobra_brute_force():
    deltas = [k / 10 for k in range(11)]
    gammas = [1 / 3, 2 / 3, 1.0]
    checked, mismatches = 0, 0
    for n in range(1, 7):
        for p in range(1, 4):
            for seed in range(10):
                rng = np.random.default_rng([n, p, seed])
                # a 0.1 lattice puts many differences exactly on the delta grid
                values = np.round(rng.random((n, p)), 1)
                preds = MachinePredictions(values, tuple(f"m{j}" for j in range(p)))
                queries = list(values) + [np.round(rng.random(p), 1), rng.random(p)]
                for q in queries:
                    for delta in deltas:
                        for gamma in gammas:
                            got = cobra_weights(q, preds, CobraParams(delta, gamma)).weights.tolist()
                            checked += 1
                            mismatches += got != _brute_cobra(q, values.tolist(), delta, gamma)
    report(2, mismatches == 0, f"{checked} weight vectors, {mismatches} mismatches (exact)")


# 3 -------------------------------------------------------------------------

def _nadaraya_watson(xs, ys, x, h):
    num = den = 0.0
    for xi, yi in zip(xs, ys):
        k = math.exp(-(((xi - x) / h) ** 2))
        num += k * yi
        den += k
    return num / den


def test_criterion_3_nadaraya_watson_reduction():
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        xs, ys = rng.random(20), rng.random(20)
        h = float(rng.uniform(0.05, 0.5))
        train = Dataset(xs[:, None], ys, REGRESSION)
        empty = MachinePredictions(np.empty((20, 0)), ())
        for x in np.linspace(0, 1, 7):
            got = mixcobra_predict_regression([x], [], train, empty, MixCobraParams(h, 1.0), K.gaussian())
            worst = max(worst, abs(got - _nadaraya_watson(xs, ys, x, h)))
    report(3, worst <= 1e-9, f"50 datasets x 7 queries, max abs diff {worst:.2e} (limit 1e-9)")


# 4 -------------------------------------------------------------------------

def _consistency_error(n, seed, n_test=500):
    rng = np.random.default_rng([seed, n])
    X, Xt = rng.random((n, 6)), rng.random((n_test, 6))
    y, yt = synth_regression_target(X), synth_regression_target(Xt)
    P = np.column_stack([y, y + rng.uniform(-0.5, 0.5, n)])
    Pt = np.column_stack([yt, yt + rng.uniform(-0.5, 0.5, n_test)])
    train, preds = Dataset(X, y, REGRESSION), MachinePredictions(P, ("exact", "corrupted"))
    alpha = n ** (-1 / (6 + 2 + 2))
    grid = ParamGrid(alpha_values=[alpha], beta_values=default_mixcobra_grid(train, preds).beta_values)
    best = cross_validate_mixcobra(train, preds, grid, K.gaussian(), seed=seed).best_params
    pred = predict_many("mixcobra", Xt, Pt, train, preds, best, K.gaussian())
    return float(np.mean(np.abs(pred - yt)))


def test_criterion_4_consistency_trend():
    start = time.perf_counter()
    small = np.mean([_consistency_error(200, s) for s in range(10)])
    large = np.mean([_consistency_error(1600, s) for s in range(10)])
    ratio = large / small
    seconds = _elapsed(start)
    report(4, ratio <= 0.6 and seconds < 120,
           f"MAE n=200 {small:.5f}, n=1600 {large:.5f}, ratio {ratio:.3f} (limit 0.6), {seconds:.0f}s")


# 5 -------------------------------------------------------------------------

@pytest.mark.parametrize("generator, band", [("circles", 0.05), ("spirals", 0.10)])
def test_criterion_5_classification(generator, band):
    start = time.perf_counter()
    cfg = ExperimentConfig(generator=generator, n=200, repetitions=20,
                           machines=("lda", "logit", "knn5", "cart", "bag"),
                           aggregators=("cobra_fixed", "mixcobra"))
    table = run_experiment(cfg)
    mix, cob = table.mean("mixcobra"), table.mean("cobra_fixed")
    seconds = _elapsed(start)
    report(5, mix <= band and mix <= cob and seconds < 180,
           f"{generator}: mixcobra {mix:.4f} (limit {band}), cobra_fixed {cob:.4f}, {seconds:.0f}s")


# 6 -------------------------------------------------------------------------

def test_criterion_6_noise_machine():
    base = ExperimentConfig(generator="synth_regression", n=600, repetitions=20,
                            aggregators=("cobra_fixed", "mixcobra"))
    machines = base.resolved().machines
    clean = run_experiment(base)
    noisy = run_experiment(replace(base, machines=machines + ("noise",)))
    cobra_up = noisy.mean("cobra_fixed") / clean.mean("cobra_fixed") - 1
    mix_up = noisy.mean("mixcobra") / clean.mean("mixcobra") - 1
    report(6, cobra_up >= 0.25 and mix_up <= 0.10,
           f"cobra_fixed +{cobra_up:.1%} (need >= 25%), mixcobra +{mix_up:.1%} (need <= 10%)")


# 7 -------------------------------------------------------------------------

def test_criterion_7_dimension_sweep():
    start = time.perf_counter()
    cfg = ExperimentConfig(generator="synth_regression", repetitions=20, aggregators=("mixcobra",))
    tables = run_dimension_sweep(cfg, [0, 5, 10, 15, 20])
    first, last = tables[0], tables[-1]
    knn = last.mean("knn2") / first.mean("knn2")
    mix = last.mean("mixcobra") / first.mean("mixcobra")
    seconds = _elapsed(start)
    report(7, knn >= 2 and mix <= 1.6 and seconds < 300 and last.dim == 26,
           f"d={first.dim}->{last.dim}: knn2 x{knn:.3f} (need >= 2), mixcobra x{mix:.3f} (need <= 1.6), {seconds:.0f}s")


# 8 -------------------------------------------------------------------------

def test_criterion_8_cli_determinism(tmp_path):
    bench = tmp_path / "bench.cfg"
    bench.write_text("generator = spirals\nn = 100\nrepetitions = 4\nmachines = lda, knn5, cart\n"
                     "grid_size = 4\nfolds = 3\n")
    sweep = tmp_path / "sweep.cfg"
    sweep.write_text("generator = synth_regression\nn = 90\nrepetitions = 3\nmachines = knn2, lm\n"
                     "extra_dims = 0, 5\ngrid_size = 3\nfolds = 3\n")
    runs = [("bench", bench), ("sweep", sweep), ("tune", bench), ("gen", bench)]
    differing = []
    for verb, cfg in runs:
        outs = []
        for i, parallel in enumerate(("false", "true", "false", "true")):
            out = tmp_path / f"{verb}{i}"
            assert main([verb, "--config", str(cfg), "--out", str(out), "--seed", "11", "--parallel", parallel]) == 0
            outs.append(out)
        for other in outs[1:]:
            differing.extend(_tree_diff(outs[0], other))
    report(8, not differing, f"4 verbs x 4 runs (parallel on/off), differing files: {differing or 'none'}")


def _tree_diff(a, b):
    cmp = filecmp.dircmp(a, b)
    bad = [str(a / f) for f in cmp.diff_files + cmp.left_only + cmp.right_only + cmp.funny_files]
    # dircmp compares shallowly by stat; recheck contents byte by byte
    bad += [str(a / f) for f in cmp.same_files if (a / f).read_bytes() != (b / f).read_bytes()]
    for sub in cmp.common_dirs:
        bad.extend(_tree_diff(a / sub, b / sub))
    return bad
