import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal, norm

from ttdensity.densities import (GaussianSpec, RadarSpec, correlation_matrix, gaussian_pdf,
                                 radar_pdf)


def test_standard_normal_mode():
    spec = GaussianSpec([0.0], [[1.0]])
    assert gaussian_pdf(spec, [0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_bivariate_mode():
    spec = GaussianSpec([1.0, -2.0], np.eye(2))
    assert gaussian_pdf(spec, [1.0, -2.0]) == pytest.approx(1 / (2 * math.pi), rel=1e-15)


def test_correlated_4d_against_scipy():
    cov = correlation_matrix(4, [(0, 1)], 0.5)
    spec = GaussianSpec(np.zeros(4), cov)
    x = np.array([1.0, 1.0, 0.0, 0.0])
    expected = multivariate_normal(np.zeros(4), cov).pdf(x)
    assert gaussian_pdf(spec, x) == pytest.approx(expected, rel=1e-13)
    # closed form: Mahalanobis distance of (1,1) under unit variances and rho=1/2 is 4/3
    closed = math.exp(-0.5 * 4 / 3) / ((2 * math.pi) ** 2 * math.sqrt(0.75))
    assert gaussian_pdf(spec, x) == pytest.approx(closed, rel=1e-13)


def test_vectorised_shape():
    spec = GaussianSpec(np.zeros(3), np.eye(3))
    pts = np.zeros((4, 5, 3))
    assert gaussian_pdf(spec, pts).shape == (4, 5)


def test_gaussian_spec_validation():
    with pytest.raises(ValueError):
        GaussianSpec([0, 0], [[1, 2], [2, 1]])
    with pytest.raises(ValueError):
        GaussianSpec([0, 0], [[1, 0.5], [0.4, 1]])
    with pytest.raises(ValueError):
        GaussianSpec([0, 0, 0], np.eye(2))


def test_mode_is_maximum_over_samples(rng):
    cov = correlation_matrix(3, [(0, 2)], 0.7)
    spec = GaussianSpec([0.5, -1, 2], cov)
    pts = np.vstack([spec.mean, spec.mean + rng.normal(size=(200, 3))])
    values = gaussian_pdf(spec, pts)
    assert np.argmax(values) == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.2, 4.0), min_size=1, max_size=5), st.integers(0, 2**31))
def test_diagonal_covariance_factorises(variances, seed):
    rng = np.random.default_rng(seed)
    d = len(variances)
    mean = rng.normal(size=d)
    x = mean + rng.normal(size=d)
    joint = gaussian_pdf(GaussianSpec(mean, np.diag(variances)), x)
    product = math.prod(norm(m, math.sqrt(v)).pdf(xi) for m, v, xi in zip(mean, variances, x))
    assert joint == pytest.approx(product, rel=1e-12)


def test_radar_peak_value():
    spec = RadarSpec()
    angle = spec.mu_a
    x1, x2 = spec.mu_r * math.cos(angle), spec.mu_r * math.sin(angle)
    assert radar_pdf(spec, x1, x2) == pytest.approx(2 / math.pi, rel=1e-12)
    literal = RadarSpec(range_form="squared")
    r = math.sqrt(literal.mu_r)
    assert radar_pdf(literal, r * math.cos(angle), r * math.sin(angle)) == pytest.approx(2 / math.pi, rel=1e-12)


def test_radar_on_positive_axis():
    # bearing 0: only the angular term contributes
    expected = math.exp(-0.5 * (1.2 / 0.5) ** 2) * 2 / math.pi
    literal = RadarSpec(range_form="squared")
    assert radar_pdf(literal, math.sqrt(6.0), 0.0) == pytest.approx(expected, rel=1e-12)
    assert radar_pdf(RadarSpec(), 6.0, 0.0) == pytest.approx(expected, rel=1e-12)


def test_radar_origin_warns():
    with pytest.warns(RuntimeWarning, match="origin"):
        value = radar_pdf(RadarSpec(), 0.0, 0.0)
    assert np.isfinite(value)


def test_radar_spec_validation():
    with pytest.raises(ValueError):
        RadarSpec(sigma_r=0.0)
    with pytest.raises(ValueError):
        RadarSpec(range_form="polar")


@settings(max_examples=60, deadline=None)
@given(
    radius=st.floats(0.5, 10.0),
    angle=st.floats(-1.0, 1.0),
    delta=st.floats(-1.0, 1.0),
    form=st.sampled_from(["radius", "squared"]),
)
def test_radar_rotation_equivariance(radius, angle, delta, form):
    # angles stay inside (-pi, pi), so atan2 does not wrap
    spec = RadarSpec(range_form=form)
    turned = RadarSpec(mu_a=spec.mu_a + delta, range_form=form)
    x1, x2 = radius * math.cos(angle), radius * math.sin(angle)
    y1, y2 = radius * math.cos(angle + delta), radius * math.sin(angle + delta)
    assert radar_pdf(turned, y1, y2) == pytest.approx(radar_pdf(spec, x1, x2), rel=1e-9, abs=1e-300)
