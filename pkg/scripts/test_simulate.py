"""Poisson sampling — run from project root: pytest scripts/test_simulate.py"""
import numpy as np
import pytest
from scipy import stats

from core.haar import bin_count_matrix
from core.models import BlocksIntensity, ConstantIntensity, TriangularIntensity, true_haar_projection
from core.simulate import (
    SimulationConfig, sample_homogeneous, sample_inhomogeneous, sample_many, substream,
)
from shared.errors import ConfigurationError, DomainError


def test_zero_rate_is_empty():
    assert len(sample_homogeneous(0.0, 1.0, substream(1))) == 0


def test_negative_rate():
    with pytest.raises(DomainError):
        sample_homogeneous(-1.0, 1.0, substream(1))


def test_same_seed_same_series():
    a = sample_homogeneous(500.0, 2.0, substream(7, 0))
    b = sample_homogeneous(500.0, 2.0, substream(7, 0))
    np.testing.assert_array_equal(a.times, b.times)
    assert a.T == 2.0 and np.all(a.times < 2.0)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SimulationConfig(seed=1, M=0)
    with pytest.raises(ConfigurationError):
        SimulationConfig(seed=-1, M=1)


def test_sample_many_prefix_stable():
    model = TriangularIntensity(1000.0, 0.1, 1)
    one = sample_many(model, SimulationConfig(seed=11, M=1))
    two = sample_many(model, SimulationConfig(seed=11, M=2))
    assert len(one) == 1 and len(two) == 2
    np.testing.assert_array_equal(one[0].times, two[0].times)
    assert not np.array_equal(two[0].times, two[1].times)


def test_sample_many_independent_of_jobs():
    model = ConstantIntensity(200.0)
    serial = sample_many(model, SimulationConfig(seed=5, M=6), replicate=3)
    parallel = sample_many(model, SimulationConfig(seed=5, M=6), replicate=3, jobs=4)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.times, b.times)


def test_replicates_differ():
    model = ConstantIntensity(200.0)
    a = sample_many(model, SimulationConfig(seed=5, M=1), replicate=0)[0]
    b = sample_many(model, SimulationConfig(seed=5, M=1), replicate=1)[0]
    assert not np.array_equal(a.times, b.times)


def test_lambda_max_violation_detected():
    class Liar(ConstantIntensity):
        @property
        def lambda_max(self):
            return 50.0

    with pytest.raises(ConfigurationError):
        sample_inhomogeneous(Liar(100.0), substream(2))


@pytest.mark.slow
def test_homogeneous_mean_count():
    counts = [len(sample_homogeneous(1000.0, 1.0, substream(99, i))) for i in range(10000)]
    assert abs(np.mean(counts) - 1000.0) < 9.5


@pytest.mark.slow
def test_triangular_mean_count():
    model = TriangularIntensity(1000.0, 0.1, 1)
    counts = [len(sample_inhomogeneous(model, substream(98, i))) for i in range(10000)]
    assert abs(np.mean(counts) - 1000.0) < 9.5


@pytest.mark.slow
def test_blocks_mean_count():
    model = BlocksIntensity(A0=10000.0)
    n = 400
    counts = [len(sample_inhomogeneous(model, substream(97, i))) for i in range(n)]
    assert abs(np.mean(counts) - 20000.0) < 3 * np.sqrt(20000.0 / n)


def test_constant_thinning_matches_homogeneous_gaps():
    rng = substream(42)
    gaps = np.diff(sample_inhomogeneous(ConstantIntensity(2000.0), rng).times)
    assert stats.kstest(gaps, "expon", args=(0, 1 / 2000.0)).pvalue > 0.001


def test_pooled_count_many_realizations():
    collection = sample_many(ConstantIntensity(50.0), SimulationConfig(seed=3, M=100))
    total = sum(len(s) for s in collection)
    assert abs(total - 5000) < 3 * np.sqrt(5000)


@pytest.mark.slow
def test_bin_counts_are_poisson():
    model = TriangularIntensity(3200.0, 0.5, 1)
    J, n = 5, 2000
    X = np.vstack([
        bin_count_matrix(sample_inhomogeneous(model, substream(7, i)), J) for i in range(n)
    ])
    mu = true_haar_projection(model, J) * model.T / 2 ** J
    np.testing.assert_allclose(X.mean(axis=0), mu, atol=4 * np.sqrt(mu.max() / n))
    dispersion = X.var(axis=0, ddof=1) / X.mean(axis=0)
    assert np.all(np.abs(dispersion - 1.0) < 0.15)
