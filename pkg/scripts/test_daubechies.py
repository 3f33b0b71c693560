"""Daubechies D4 estimation — run from project root: pytest scripts/test_daubechies.py"""
import math

import numpy as np
import pytest

from core.daubechies import (
    cascade_d4, d4_decompose, d4_estimate_nonlinear, d4_filter, d4_gaussian_coeff_test,
    d4_gaussian_pvalues, d4_linear_estimate, d4_threshold_mask, detail_indices,
    interior_mask, scaling_indices, two_scale_residual, write_wavelet_table,
)
from core.events import EventSeries
from core.models import ConstantIntensity
from core.simulate import SimulationConfig, sample_many
from shared.config import CASCADE_DEPTH
from shared.errors import DomainError


def _grid_events(J: int, T: float = 1.0) -> EventSeries:
    """One event at the midpoint of every cascade cell of φ_{J,·}: the sums become exact integrals."""
    N = 3 * (1 << J) * (1 << CASCADE_DEPTH)
    return EventSeries(T * (np.arange(N) + 0.5) / N, T)


# ─── Cascade ──────────────────────────────────────────────────────────────────

def test_filter_taps():
    c = d4_filter()
    s3 = math.sqrt(3.0)
    np.testing.assert_allclose(c, np.array([1 + s3, 3 + s3, 3 - s3, 1 - s3]) / 4.0, rtol=1e-12)
    assert c.sum() == pytest.approx(2.0)


def test_depth_guard():
    with pytest.raises(DomainError):
        cascade_d4(5)


def test_normalization():
    phi, psi = cascade_d4()
    assert phi.integral() == pytest.approx(1.0, abs=1e-6)
    assert psi.integral() == pytest.approx(0.0, abs=1e-6)
    assert phi.support == (0.0, 3.0)
    assert psi.support == (-1.0, 2.0)


def test_partition_of_unity():
    phi, _ = cascade_d4()
    x = np.linspace(0.0, 1.0, 97, endpoint=False)
    total = sum(phi(x + k) for k in range(3))
    np.testing.assert_allclose(total, 1.0, atol=1e-4)


def test_zero_outside_support():
    phi, psi = cascade_d4()
    assert phi(np.array([-0.5, 3.5])).tolist() == [0.0, 0.0]
    assert psi(np.array([-1.5, 2.5])).tolist() == [0.0, 0.0]


def test_two_scale_residual_shrinks():
    residuals = [two_scale_residual(r) for r in (6, 9, 12)]
    assert residuals[0] > residuals[1] > residuals[2]


def test_wavelet_table_export(tmp_path):
    path = tmp_path / "d4.csv"
    write_wavelet_table(str(path), depth=6)
    lines = path.read_text().splitlines()
    assert lines[0] == "function,x,value"
    assert len(lines) == 1 + 2 * (3 * 64 + 1)


# ─── Index sets ───────────────────────────────────────────────────────────────

@pytest.mark.parametrize("L", [0, 1, 4])
def test_index_sets(L):
    assert scaling_indices(L)[0] == -2 and scaling_indices(L)[-1] == 3 * 2 ** L - 1
    k = detail_indices(L)[interior_mask(L)]
    np.testing.assert_array_equal(k, np.arange(1, 3 * 2 ** L - 1))


# ─── Decomposition ────────────────────────────────────────────────────────────

def test_empty_series_all_zero(empty_series):
    d = d4_decompose(empty_series, 0, 3)
    assert not d.alpha.any()
    assert all(not b.any() for b in d.beta.values())
    assert all(not v.any() for v in d.variance.values())
    assert not d4_estimate_nonlinear(empty_series, 0, 2).sample(50).any()


def test_single_event_is_wavelet_value():
    t, L = 0.37, 2
    _, psi = cascade_d4()
    d = d4_decompose(EventSeries(np.array([t]), 1.0), 0, L + 1)
    u = 3 * t
    expected = 2 ** (L / 2) * psi(2 ** L * u - detail_indices(L))
    np.testing.assert_allclose(d.beta[L], expected, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(d.variance[L], expected ** 2, rtol=1e-12, atol=1e-15)


def test_decomposition_additive():
    rng = np.random.default_rng(5)
    times = np.sort(rng.uniform(0, 1, 400))
    A = EventSeries(times[0::2], 1.0)
    B = EventSeries(times[1::2], 1.0)
    both = d4_decompose(EventSeries(times, 1.0), 1, 4)
    a, b = d4_decompose(A, 1, 4), d4_decompose(B, 1, 4)
    np.testing.assert_allclose(both.alpha, a.alpha + b.alpha, rtol=1e-12, atol=1e-12)
    for L in range(1, 4):
        np.testing.assert_allclose(both.beta[L], a.beta[L] + b.beta[L], rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("T", [1.0, 2.5])
def test_uniform_events_reconstruct_interior(T):
    J = 3
    events = _grid_events(J, T)
    est = d4_linear_estimate(events, J)
    t = T * np.linspace(0.2, 0.8, 25)
    np.testing.assert_allclose(est(t), len(events) / T, rtol=1e-8)


def test_decomposition_frame(four_events):
    frame = d4_decompose(four_events, 0, 2).to_frame()
    assert set(frame["kind"]) == {"alpha", "beta"}
    assert int((frame["kind"] == "beta").sum()) == detail_indices(0).size + detail_indices(1).size


def test_estimate_domain(four_events):
    est = d4_linear_estimate(four_events, 2)
    with pytest.raises(DomainError):
        est(1.0)
    assert est.to_frame(10).shape == (10, 2)


# ─── Gaussian test / thresholding ─────────────────────────────────────────────

def test_gaussian_rejects_large_coefficient():
    out = d4_gaussian_coeff_test([10.0], [4.0], M=1, alpha=0.05)
    assert out.reject and out.dof == 1
    assert out.R == pytest.approx(25.0)


def test_gaussian_zero_never_rejected():
    assert not d4_gaussian_coeff_test([0.0], [4.0]).reject
    zero_var = d4_gaussian_coeff_test([3.0], [0.0])
    assert zero_var.p_value == 1.0 and not zero_var.reject


def test_gaussian_pvalues_vectorized():
    p = d4_gaussian_pvalues(np.array([10.0, 0.0, 1.0]), np.array([4.0, 4.0, 0.0]), M=1)
    assert p[0] == pytest.approx(d4_gaussian_coeff_test([10.0], [4.0]).p_value)
    assert p[1] == 1.0 and p[2] == 1.0


def test_threshold_keeps_boundary(four_events):
    d = d4_decompose(four_events, 0, 3)
    keep = d4_threshold_mask(d, 0.05)
    for L, mask in keep.items():
        assert mask[~interior_mask(L)].all()


# ─── Monte Carlo ──────────────────────────────────────────────────────────────

@pytest.mark.slow
def test_homogeneous_unbiased_and_calibrated():
    n = 2000
    collection = sample_many(ConstantIntensity(1000.0), SimulationConfig(seed=51, M=n))
    d = d4_decompose(collection, 0, 4)
    rows = d.beta_rows[1][:, interior_mask(1)]
    se = rows.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(rows.mean(axis=0)) < 3.5 * se)

    rejected, total = 0, 0
    for L in range(1, 4):
        inner = interior_mask(L)
        p = d4_gaussian_pvalues(d.beta_rows[L][:, inner], d.var_rows[L][:, inner], 1)
        rejected += int(np.sum(p <= 0.05))
        total += p.size
    assert abs(rejected / total - 0.05) < 0.01


@pytest.mark.slow
def test_constant_mean_reconstruction_interior():
    n = 500
    est = [
        d4_linear_estimate(sample_many(ConstantIntensity(1000.0), SimulationConfig(seed=53, M=1), replicate=i), 3)
        for i in range(n)
    ]
    t = np.linspace(0.2, 0.8, 13)
    values = np.vstack([e(t) for e in est])
    se = values.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(values.mean(axis=0) - 1000.0) < 3.5 * se)
