import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chi2

from nebp.models import (
    H, MeasurementModel, MotionModel, legacy_likelihood_ratio, measurement_density,
    new_po_likelihood_ratio, sample_transition,
)
from nebp.types import InputError, KinematicState


def test_transition_constant_velocity():
    m = MotionModel(dt=1.0, accel_noise_std=0.0)
    x = sample_transition(KinematicState([0, 0], [1, 0], [0, 0]), m, None)
    assert np.allclose(x.position, [1, 0])


def test_transition_constant_acceleration():
    m = MotionModel(dt=1.0, accel_noise_std=0.0)
    x = sample_transition(KinematicState([0, 0], [0, 0], [2, 0]), m, None)
    assert np.allclose(x.position, [1, 0]) and np.allclose(x.velocity, [2, 0])


def test_transition_monte_carlo_mean():
    m = MotionModel(dt=0.5, accel_noise_std=0.7)
    x0 = np.array([1.0, -2.0, 0.5, 0.3, 0.1, -0.2])
    n = 100_000
    out = m.propagate(np.tile(x0, (n, 1)), np.random.default_rng(3))
    expected = m.transition_matrix() @ x0
    sd = np.sqrt(np.diag(m.noise_covariance()))
    tol = 3 * sd / np.sqrt(n) + 1e-9  # noise-free components only see rounding
    assert np.all(np.abs(out.mean(axis=0) - expected) <= tol)


def test_motion_model_validation():
    with pytest.raises(InputError):
        MotionModel(dt=0.0)
    with pytest.raises(InputError):
        MotionModel(survival_prob=1.5)


def test_density_peak_and_unit_mahalanobis():
    model = MeasurementModel(noise_cov=np.eye(4))
    x = KinematicState([1, 2], [3, 4], [0, 0])
    z = H @ x.to_vector()
    peak = 1.0 / ((2 * np.pi) ** 2 * math.sqrt(1.0))
    assert measurement_density(z, x, model) == pytest.approx(peak, rel=1e-12)
    assert measurement_density(z + np.array([1, 0, 0, 0]), x, model) == pytest.approx(peak * math.exp(-0.5), rel=1e-12)
    assert measurement_density(z + 1e3, x, model) == 0.0


def test_density_integrates_to_one():
    cov = np.diag([0.25, 0.36, 0.16, 0.49])
    model = MeasurementModel(noise_cov=cov)
    half = 6 * np.sqrt(np.diag(cov))  # box holding far more than 0.999 of the mass
    rng = np.random.default_rng(0)
    n = 1_000_000
    z = rng.uniform(-half, half, (n, 4))
    vol = np.prod(2 * half)
    est = model.density(np.zeros(4), np.hstack([z, np.zeros((n, 2))])).mean() * vol
    assert est == pytest.approx(1.0, rel=0.01)


def test_noise_cov_must_be_spd():
    with pytest.raises(InputError):
        MeasurementModel(noise_cov=-np.eye(4))


def test_legacy_ratio_examples():
    assert legacy_likelihood_ratio(0.2, 1, 1, 1, 0.9, 0.05) == pytest.approx(3.6, rel=1e-12)
    assert legacy_likelihood_ratio(0.2, 1, 0, 1, 0.9, 0.05) == pytest.approx(0.1, rel=1e-12)
    assert legacy_likelihood_ratio(0.2, 0, 2, 2, 0.9, 0.05) == 0.0
    with pytest.raises(InputError):
        legacy_likelihood_ratio(0.2, 1, 3, 2, 0.9, 0.05)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 10), st.floats(1e-6, 10), st.floats(1e-3, 1e3))
def test_legacy_ratio_scale_invariant(density, clutter, scale):
    a = legacy_likelihood_ratio(density, 1, 1, 1, 0.9, clutter)
    b = legacy_likelihood_ratio(density * scale, 1, 1, 1, 0.9, clutter * scale)
    assert a == pytest.approx(b, rel=1e-12)


def test_new_po_ratio_examples():
    # mu_u f_u = 0.01 split as mu_u=0.01, f_u=1
    assert new_po_likelihood_ratio(1.0, 0.2, 1, 0, 3, 0.01, 0.05) == pytest.approx(0.04, rel=1e-12)
    assert new_po_likelihood_ratio(1.0, 0.2, 1, 3, 3, 0.01, 0.05) == 0.0
    assert new_po_likelihood_ratio(1.0, 0.2, 1, 0, 3, 0.0, 0.05) == 0.0
    with pytest.raises(InputError):
        new_po_likelihood_ratio(1.0, 0.2, 1, 4, 3, 0.01, 0.05)


def test_gate_threshold_is_four_dof():
    assert MeasurementModel(gate_prob=0.999).gate_threshold == pytest.approx(chi2.ppf(0.999, 4))


def test_uniform_density_normalizes_over_support():
    m = MeasurementModel(roi_half_width=54, max_speed=15)
    assert m.uniform_density() * (108 ** 2) * (30 ** 2) == pytest.approx(1.0)
