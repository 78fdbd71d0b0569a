import math

import numpy as np
import pytest

from objassoc.errors import InvalidInputError, NumericalError
from objassoc.mixture import (
    GaussianComponent,
    LandmarkGMM,
    build_gmm,
    max_measurement_likelihood,
    observation_vector,
)

from conftest import make_measurement, quat_about

PEAK_6D = (2.0 * math.pi) ** -3  # standard-normal density at the mean in 6-D


def single_gmm(mean=None, cov=None) -> LandmarkGMM:
    mean = np.zeros(6) if mean is None else np.asarray(mean, dtype=float)
    cov = np.eye(6) if cov is None else cov
    return LandmarkGMM(components=(GaussianComponent(mean, cov),), weights=(1.0,))


class TestObservationVector:
    def test_identity_at_origin(self):
        assert np.array_equal(observation_vector(make_measurement(1)), np.zeros(6))

    def test_pure_translation(self):
        m = make_measurement(1, pos=(1, 2, 3))
        assert np.array_equal(observation_vector(m), [1, 2, 3, 0, 0, 0])

    def test_quarter_turn_about_z(self):
        m = make_measurement(1, quat=quat_about([0, 0, 1], 90.0))
        v = observation_vector(m)
        # axis-angle oracle: angle = 2*atan2(|vec|, w), axis = vec/|vec|
        q = m.pose.orientation
        angle = 2.0 * math.atan2(float(np.linalg.norm(q[1:])), float(q[0]))
        assert angle == pytest.approx(math.pi / 2.0, abs=1e-12)
        assert v[:3] == pytest.approx([0, 0, 0])
        assert v[3:] == pytest.approx([0, 0, math.pi / 2.0], abs=1e-12)

    def test_magnitude_bounded_by_pi(self, rng):
        from conftest import random_unit_quaternion

        for _ in range(200):
            m = make_measurement(1, quat=random_unit_quaternion(rng))
            assert np.linalg.norm(observation_vector(m)[3:]) <= math.pi + 1e-12


class TestBuildGmm:
    def test_single_measurement(self):
        gmm = build_gmm([make_measurement(1)], np.eye(6))
        assert len(gmm.components) == 1
        assert gmm.weights == (1.0,)

    def test_uniform_weights(self):
        ms = [make_measurement(i, pos=(i, 0, 0)) for i in range(1, 5)]
        gmm = build_gmm(ms, np.eye(6))
        assert gmm.weights == (0.25, 0.25, 0.25, 0.25)

    @pytest.mark.parametrize("count", [1, 3, 17, 100])
    def test_weights_sum_to_one(self, count):
        ms = [make_measurement(i, pos=(0.01 * i, 0, 0)) for i in range(1, count + 1)]
        gmm = build_gmm(ms, np.eye(6))
        assert sum(gmm.weights) == pytest.approx(1.0, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            build_gmm([], np.eye(6))


class TestDensity:
    def test_peak_of_standard_normal(self):
        gmm = single_gmm()
        assert gmm.density(np.zeros(6)) == pytest.approx(PEAK_6D, abs=1e-12)

    def test_far_tail_underflows_to_zero(self):
        gmm = single_gmm()
        x = np.full(6, 50.0)  # Mahalanobis far above 40
        assert gmm.density(x) < 1e-300

    def test_duplicate_components_collapse(self, rng):
        comp = GaussianComponent(np.arange(6.0), np.eye(6))
        double = LandmarkGMM(components=(comp, comp), weights=(0.5, 0.5))
        single = LandmarkGMM(components=(comp,), weights=(1.0,))
        for _ in range(20):
            x = rng.uniform(-3, 9, size=6)
            assert double.density(x) == single.density(x)

    def test_component_permutation_invariance(self, rng):
        c1 = GaussianComponent(np.zeros(6), np.eye(6))
        c2 = GaussianComponent(np.ones(6), 2.0 * np.eye(6))
        c3 = GaussianComponent(-np.ones(6), 0.5 * np.eye(6))
        a = LandmarkGMM(components=(c1, c2, c3), weights=(0.2, 0.3, 0.5))
        b = LandmarkGMM(components=(c3, c1, c2), weights=(0.5, 0.2, 0.3))
        for _ in range(20):
            x = rng.uniform(-2, 2, size=6)
            assert a.density(x) == pytest.approx(b.density(x), rel=1e-12)

    def test_isotropy(self, rng):
        gmm = single_gmm(cov=0.7**2 * np.eye(6))
        for _ in range(50):
            offset = rng.normal(size=6)
            offset /= np.linalg.norm(offset)
            radius = rng.uniform(0.1, 3.0)
            x1 = radius * offset
            other = rng.normal(size=6)
            other /= np.linalg.norm(other)
            x2 = radius * other
            assert gmm.density(x1) == pytest.approx(gmm.density(x2), rel=1e-10)

    def test_density_many_matches_scalar(self, rng):
        ms = [make_measurement(i, pos=(0.3 * i, 0, 0)) for i in range(1, 4)]
        gmm = build_gmm(ms, np.diag([0.25**2] * 3 + [0.03] * 3))
        xs = rng.normal(size=(64, 6))
        batched = gmm.density_many(xs)
        for i, x in enumerate(xs):
            assert batched[i] == pytest.approx(gmm.density(x), rel=1e-12)

    def test_normalization_with_default_base_covariance(self, rng):
        # Importance-sampled integral over the +-8 sigma box, diagonal case.
        sigmas = np.array([0.25] * 3 + [math.radians(10.0)] * 3)
        gmm = single_gmm(cov=np.diag(sigmas**2))
        proposal = 1.5 * sigmas
        xs = rng.normal(scale=proposal, size=(2**17, 6))
        inside = np.all(np.abs(xs) <= 8.0 * sigmas, axis=1)
        log_q = (
            -0.5 * np.sum((xs / proposal) ** 2, axis=1)
            - np.sum(np.log(proposal))
            - 3.0 * math.log(2.0 * math.pi)
        )
        integral = np.mean(gmm.density_many(xs) / np.exp(log_q) * inside)
        assert integral == pytest.approx(1.0, abs=0.05)


class TestValidation:
    def test_asymmetric_covariance_rejected(self):
        cov = np.eye(6)
        cov[0, 1] = 1e-3
        with pytest.raises(NumericalError):
            GaussianComponent(np.zeros(6), cov)

    def test_covariance_below_floor_rejected(self):
        cov = np.eye(6)
        cov[5, 5] = 1e-12
        with pytest.raises(NumericalError):
            GaussianComponent(np.zeros(6), cov)

    def test_weights_must_sum_to_one(self):
        comp = GaussianComponent(np.zeros(6), np.eye(6))
        with pytest.raises(InvalidInputError):
            LandmarkGMM(components=(comp,), weights=(0.9,))


class TestMaxMeasurementLikelihood:
    def test_measurement_at_target_mean(self):
        target = single_gmm()
        candidate = [make_measurement(1)]
        assert max_measurement_likelihood(candidate, target) == pytest.approx(
            PEAK_6D, abs=1e-12
        )

    def test_far_candidate_is_negligible(self):
        target = single_gmm()
        candidate = [make_measurement(1, pos=(200, 0, 0))]
        assert max_measurement_likelihood(candidate, target) < 1e-300

    def test_monotone_under_additional_measurements(self, rng):
        target = single_gmm()
        candidate = [make_measurement(1, pos=(3, 0, 0))]
        base = max_measurement_likelihood(candidate, target)
        for i in range(5):
            candidate.append(
                make_measurement(2 + i, pos=tuple(rng.uniform(-4, 4, size=3)))
            )
            grown = max_measurement_likelihood(candidate, target)
            assert grown >= base
            base = grown
