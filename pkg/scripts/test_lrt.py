"""Likelihood-ratio tests — run from project root: pytest scripts/test_lrt.py"""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from core import lrt
from core.events import EventSeries
from core.lrt import (
    BoundaryPolicy, chi2_quantile, chi2_sf, critical_value, lrt_equal_means, lrt_pairwise,
    max_equal_means_statistic, pairwise_pvalues, single_coefficient_innovation_test,
)
from core.models import ConstantIntensity
from core.simulate import SimulationConfig, sample_many
from shared.errors import DomainError, EmptyDataError


# ─── Chi-square ───────────────────────────────────────────────────────────────

def test_quantiles():
    assert chi2_quantile(0.95, 1) == pytest.approx(3.8415, abs=1e-4)
    assert chi2_quantile(0.95, 3) == pytest.approx(7.8147, abs=1e-4)
    assert critical_value(0.05, 2) == pytest.approx(5.9915, abs=1e-4)


@pytest.mark.parametrize("dof", [1, 2, 7, 4096])
def test_sf_at_zero(dof):
    assert chi2_sf(0.0, dof) == 1.0


def test_chi2_domain():
    with pytest.raises(DomainError):
        chi2_sf(1.0, 0)
    with pytest.raises(DomainError):
        chi2_sf(-1.0, 2)
    with pytest.raises(DomainError):
        chi2_quantile(1.0, 2)
    with pytest.raises(DomainError):
        critical_value(0.0, 2)


# ─── Equal means / homogeneity ────────────────────────────────────────────────

def test_equal_means_hand_value():
    out = lrt_equal_means([3, 5])
    assert out.R == pytest.approx(2 * (3 * math.log(3 / 4) + 5 * math.log(5 / 4)), rel=1e-12)
    assert out.R == pytest.approx(0.5053, abs=1e-4)
    assert out.dof == 1
    assert out.p_value == pytest.approx(0.477, abs=1e-3)


def test_equal_means_flat():
    out = lrt_equal_means([4, 4, 4, 4])
    assert out.R == 0.0 and out.p_value == 1.0 and out.dof == 3


def test_equal_means_collapses_over_rows():
    stacked = lrt_equal_means([[3, 5], [5, 3]], delta=2.0)
    summed = lrt_equal_means([8, 8], delta=2.0)
    assert stacked.R == pytest.approx(summed.R, abs=1e-12)
    a = lrt_equal_means([[1, 4, 0], [2, 2, 5]])
    b = lrt_equal_means([3, 6, 5])
    assert abs(a.R - b.R) <= 1e-12


def test_equal_means_errors():
    with pytest.raises(EmptyDataError):
        lrt_equal_means([0, 0, 0])
    with pytest.raises(DomainError):
        lrt_equal_means([5])
    with pytest.raises(DomainError):
        lrt_equal_means([1, -1])


def test_homogeneity_hand_value():
    s = EventSeries(np.array([0.1, 0.2, 0.3, 0.6]), 1.0)
    out = lrt.test_homogeneity(s, 1)
    assert out.R == pytest.approx(1.0465, abs=1e-4)
    assert out.dof == 1
    assert out.p_value == pytest.approx(0.306, abs=1e-3)
    assert not out.reject
    record = out.to_record()
    assert record.test == "homogeneity" and record.level == 1


def test_homogeneity_vacuous_and_empty(empty_series, four_events):
    with pytest.raises(DomainError, match="vacuous"):
        lrt.test_homogeneity(four_events, 0)
    with pytest.raises(EmptyDataError):
        lrt.test_homogeneity(empty_series, 2)


def test_homogeneity_dof():
    s = EventSeries(np.linspace(0.01, 0.99, 50), 1.0)
    assert lrt.test_homogeneity(s, 3).dof == 7


def test_max_statistic_brute_force():
    for P in range(2, 5):
        for total in range(1, 13):
            best = 0.0
            for comp in itertools.product(range(total + 1), repeat=P):
                if sum(comp) != total:
                    continue
                best = max(best, lrt_equal_means(comp).R)
            assert best == pytest.approx(max_equal_means_statistic(total, P), rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=2, max_size=6).filter(lambda xs: sum(xs) > 0))
def test_equal_means_bounded(counts):
    R = lrt_equal_means(counts).R
    assert 0.0 <= R <= max_equal_means_statistic(sum(counts), len(counts)) + 1e-9


# ─── Pairwise / innovation ────────────────────────────────────────────────────

def test_pairwise_equal_pair():
    out = lrt_pairwise([2, 2])
    assert out.R == 0.0 and out.p_value == 1.0


def test_pairwise_hand_value():
    out = lrt_pairwise([4, 0])
    assert out.R == pytest.approx(8 * math.log(2), rel=1e-12)
    assert out.R == pytest.approx(5.545, abs=1e-3)
    assert out.dof == 1
    assert out.p_value == pytest.approx(0.0185, abs=1e-4)
    assert out.reject


@pytest.mark.parametrize("policy, dof", [
    (BoundaryPolicy.CONSERVATIVE, 2),
    (BoundaryPolicy.MAX_LIKELIHOOD, 1),
    (BoundaryPolicy.INTERMEDIATE, 1),
])
def test_boundary_policies(policy, dof):
    out = lrt_pairwise([0, 0, 3, 5], policy=policy)
    assert out.boundary_count == 1
    assert out.dof == dof
    assert out.policy is policy


def test_policy_dof_rule():
    assert BoundaryPolicy.INTERMEDIATE.dof(8, 3) == 6
    assert BoundaryPolicy.MAX_LIKELIHOOD.dof(8, 3) == 5
    assert BoundaryPolicy("conservative").dof(8, 3) == 8


def test_pairwise_errors():
    with pytest.raises(EmptyDataError):
        lrt_pairwise([0, 0, 0, 0])
    with pytest.raises(DomainError):
        lrt_pairwise([1, 2, 3])


def test_innovation_equal_pairs():
    s = EventSeries(np.array([0.1, 0.3, 0.6, 0.8]), 1.0)
    out = lrt.test_innovation(s, 1)
    assert out.R == 0.0 and out.dof == 2 and out.level == 1


def test_innovation_empty(empty_series):
    with pytest.raises(EmptyDataError):
        lrt.test_innovation(empty_series, 2)


def test_pairwise_collapses_over_rows():
    a = lrt_pairwise([[4, 0, 1, 2], [3, 1, 0, 0]])
    b = lrt_pairwise([7, 1, 1, 2])
    assert abs(a.R - b.R) <= 1e-12


# ─── Single coefficient ───────────────────────────────────────────────────────

def test_single_coefficient():
    out = single_coefficient_innovation_test(4, 0)
    assert out.R == pytest.approx(5.545, abs=1e-3)
    assert out.p_value == pytest.approx(0.0185, abs=1e-4)
    assert single_coefficient_innovation_test(6, 6).R == 0.0
    empty = single_coefficient_innovation_test(0, 0)
    assert empty.p_value == 1.0 and not empty.reject


def test_vectorized_pvalues_match_scalar():
    S = np.array([4, 0, 0, 0, 3, 5, 10, 2])
    p = pairwise_pvalues(S)
    expected = [single_coefficient_innovation_test(S[i], S[i + 1]).p_value for i in range(0, 8, 2)]
    np.testing.assert_allclose(p, expected, rtol=1e-12)


# ─── Null calibration ─────────────────────────────────────────────────────────

@pytest.mark.slow
def test_null_size_and_uniform_pvalues():
    n = 10000
    model = ConstantIntensity(1600.0)     # 200 events per level-3 cell
    p_h, p_i = [], []
    for i in range(n):
        events = sample_many(model, SimulationConfig(seed=31, M=1), replicate=i)
        p_h.append(lrt.test_homogeneity(events, 3).p_value)
        p_i.append(lrt.test_innovation(events, 2).p_value)
    for p in (np.array(p_h), np.array(p_i)):
        assert abs(np.mean(p <= 0.05) - 0.05) < 0.01
        assert stats.kstest(p, "uniform").statistic < 0.02
