import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from mixcobra.combine import CLASSIFICATION, REGRESSION, Dataset
from mixcobra.datagen import (
    CLASSIFICATION_GENERATORS,
    GENERATORS,
    GeneratorSpec,
    generate,
    inflate_dims,
    standardize,
    synth_regression_function,
    synth_regression_target,
)
from mixcobra.learners import fit


@pytest.mark.parametrize("name", GENERATORS)
def test_deterministic_and_shaped(name):
    a = generate(GeneratorSpec(name, 100, seed=3))
    b = generate(GeneratorSpec(name, 100, seed=3))
    assert np.array_equal(a.features, b.features) and np.array_equal(a.targets, b.targets)
    if name in CLASSIFICATION_GENERATORS:
        assert a.d == 2 and a.task == CLASSIFICATION
        assert a.targets.sum() == 50
    else:
        assert a.d == 6 and a.task == REGRESSION


def test_gauss_class0_mean():
    data = generate(GeneratorSpec("gauss", 1000, seed=0))
    mean0 = data.features[data.targets == 0].mean(axis=0)
    assert np.all(np.abs(mean0 - [0.0, 2.0]) <= 0.15)


def test_comete_covariance_is_used():
    data = generate(GeneratorSpec("comete", 20000, seed=1))
    cov0 = np.cov(data.features[data.targets == 0].T)
    np.testing.assert_allclose(cov0, [[3, 9 / 4], [9 / 4, 15]], rtol=0.1)


def test_nuclear_class0_on_unit_disk():
    data = generate(GeneratorSpec("nuclear", 400, seed=2))
    assert np.all(np.linalg.norm(data.features[data.targets == 0], axis=1) <= 1)


def test_circles_bands_and_knn():
    data = generate(GeneratorSpec("circles", 200, seed=0))
    r = np.linalg.norm(data.features, axis=1)
    assert np.all(np.abs(r[data.targets == 0] - 1) < 0.5)
    assert np.all(np.abs(r[data.targets == 1] - 2) < 0.5)
    test = generate(GeneratorSpec("circles", 200, seed=1))
    err = np.mean(fit("knn5", data).predict(test.features) != test.targets)
    assert err <= 0.02


@pytest.mark.parametrize("name", ["circles", "spirals"])
def test_classes_do_not_overlap(name):
    data = generate(GeneratorSpec(name, 400, seed=5))
    a, b = data.features[data.targets == 0], data.features[data.targets == 1]
    assert cdist(a, b).min() > 0


def test_unknown_and_odd():
    with pytest.raises(ValueError):
        generate(GeneratorSpec("moons", 10))
    with pytest.raises(ValueError):
        generate(GeneratorSpec("circles", 11))


def test_regression_target_range_and_noise_free():
    data = generate(GeneratorSpec("synth_regression", 500, seed=0))
    assert data.targets.min() >= 0 and data.targets.max() <= 1
    clean = generate(GeneratorSpec("synth_regression", 50, seed=0, noise_sd=0.0))
    np.testing.assert_allclose(clean.targets, synth_regression_target(clean.features), atol=1e-15)


def test_regression_function_oracle():
    x = np.array([[0.25, 0.5, 0.5, 0.1, 0.2, 0.3]])
    assert synth_regression_function(x)[0] == pytest.approx(1.0 + 0.5 + 0.6)
    assert synth_regression_target(np.zeros((1, 6)))[0] == pytest.approx(1 / 7)
    assert synth_regression_target(np.array([[0.25, 1, 1, 1, 1, 1]]))[0] == pytest.approx(1.0)


def test_inflate_dims():
    data = generate(GeneratorSpec("synth_regression", 300, seed=0))
    assert inflate_dims(data, 0, 1) is data
    wide = inflate_dims(data, 5, 1)
    assert wide.d == 11
    assert np.array_equal(wide.features[:, :6], data.features) and np.array_equal(wide.targets, data.targets)
    assert np.all((wide.features[:, 6:].mean(axis=0) > 0.4) & (wide.features[:, 6:].mean(axis=0) < 0.6))
    with pytest.raises(ValueError):
        inflate_dims(data, -1, 0)


def test_generator_noise_dims():
    assert generate(GeneratorSpec("spot", 20, seed=0, noise_dims=3)).d == 5


def test_standardize_examples():
    data = Dataset(np.array([[0.0, 5.0], [2.0, 5.0]]), np.array([0.1, 0.2]), REGRESSION)
    out, transform = standardize(data)
    assert out.features[:, 0].tolist() == [-1.0, 1.0]
    assert out.features[:, 1].tolist() == [5.0, 5.0]
    assert np.array_equal(transform.apply(data).features, out.features)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 40), d=st.integers(1, 5))
def test_standardize_moments(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.normal(3.0, 2.0, (n, d))
    out, _ = standardize(Dataset(X, rng.random(n), REGRESSION))
    np.testing.assert_allclose(out.features.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(out.features.std(axis=0), 1, atol=1e-9)
