import numpy as np
import pytest

from modpack.decoy_estimator import DEFAULT_INTENSITIES, BoundedEstimate, DecoyIntensitySet, GainVector, \
    bound_interval, bound_statistic, estimate_single_photon_statistic, gains_from_yields


def test_single_decoy_reduces_to_two_point_formula():
    intensity_set = DecoyIntensitySet((0.5,))
    gains = np.array([0.01, 0.2])
    expected = (np.exp(0.5) * 0.2 - 0.01) / 0.5
    assert estimate_single_photon_statistic(gains, intensity_set) == pytest.approx(expected, rel=1e-14)


def test_estimator_exact_for_vacuum_and_single_photon_yields():
    intensity_set = DecoyIntensitySet(DEFAULT_INTENSITIES)
    yields = np.zeros(41)
    yields[0], yields[1] = 0.013, 0.37
    gains = gains_from_yields(yields, intensity_set)
    assert estimate_single_photon_statistic(GainVector(gains), intensity_set) == pytest.approx(0.37, abs=1e-12)


def test_bound_interval_at_reported_intensities():
    assert bound_interval(DecoyIntensitySet(DEFAULT_INTENSITIES)) == pytest.approx(1.09e-3, rel=0.03)


def test_containment_over_random_yields(rng):
    intensity_set = DecoyIntensitySet(DEFAULT_INTENSITIES)
    delta = bound_interval(intensity_set)
    yields = rng.random((41, 10_000))
    estimates = estimate_single_photon_statistic(gains_from_yields(yields, intensity_set), intensity_set)
    violations = np.count_nonzero((yields[1] < estimates - delta - 1e-12) | (yields[1] > estimates + 1e-12))
    assert violations == 0


def test_even_number_of_decoys_bounds_from_below(rng):
    intensity_set = DecoyIntensitySet((0.1, 0.6))
    delta = bound_interval(intensity_set)
    yields = rng.random((41, 2000))
    estimates = estimate_single_photon_statistic(gains_from_yields(yields, intensity_set), intensity_set)
    assert np.all(yields[1] >= estimates - 1e-12)
    assert np.all(yields[1] <= estimates + delta + 1e-12)


def test_bound_statistic_orientation_and_clamp():
    odd = DecoyIntensitySet(DEFAULT_INTENSITIES)
    bounded = bound_statistic(0.3, odd, delta=0.01)
    assert (bounded.lower, bounded.estimate, bounded.upper) == pytest.approx((0.29, 0.3, 0.3))
    even = DecoyIntensitySet((0.1, 0.6))
    bounded = bound_statistic(0.3, even, delta=0.01)
    assert (bounded.lower, bounded.upper) == pytest.approx((0.3, 0.31))
    clamped = bound_statistic(-0.002, odd, delta=0.01)
    assert clamped.lower == 0.0 and clamped.estimate == 0.0 and clamped.raw == -0.002


def test_intensity_set_validation():
    for bad in ((), (0.0, 0.5), (0.5, 0.5), (0.6, 0.2), (-0.1,)):
        with pytest.raises(ValueError):
            DecoyIntensitySet(bad)
    assert DecoyIntensitySet(DEFAULT_INTENSITIES).with_vacuum == (0.0,) + DEFAULT_INTENSITIES


def test_missing_intensity_rejected():
    with pytest.raises(ValueError):
        estimate_single_photon_statistic(np.ones(3) * 0.1, DecoyIntensitySet(DEFAULT_INTENSITIES))


def test_gain_vector_and_estimate_validation():
    with pytest.raises(ValueError):
        GainVector(np.array([0.1, 1.2]))
    with pytest.raises(ValueError):
        GainVector(np.array([0.1, -0.2]), kind='density')
    with pytest.raises(ValueError):
        BoundedEstimate(0.5, 0.6, 0.7)
    assert BoundedEstimate.exact(0.25).width == 0.0


def test_estimator_broadcasts_over_bins():
    intensity_set = DecoyIntensitySet(DEFAULT_INTENSITIES)
    yields = np.zeros((41, 3, 2))
    yields[1] = [[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]]
    estimate = estimate_single_photon_statistic(gains_from_yields(yields, intensity_set), intensity_set)
    assert estimate.shape == (3, 2)
    assert np.allclose(estimate, yields[1], atol=1e-12)


def test_estimator_is_linear(rng):
    intensity_set = DecoyIntensitySet(DEFAULT_INTENSITIES)
    g1, g2 = rng.random((2, 4, 5))
    for alpha, beta in ((1.0, 1.0), (0.3, -2.5), (-1.0, 0.0)):
        combined = estimate_single_photon_statistic(alpha * g1 + beta * g2, intensity_set)
        expected = (alpha * estimate_single_photon_statistic(g1, intensity_set)
                    + beta * estimate_single_photon_statistic(g2, intensity_set))
        assert np.allclose(combined, expected, rtol=1e-12, atol=1e-12)


def test_single_decoy_bound_interval():
    for mu in (0.05, 0.3, 1.2):
        assert bound_interval(DecoyIntensitySet((mu,))) == pytest.approx(np.expm1(mu) / mu - 1, rel=1e-12)


@pytest.mark.parametrize('intensities', [(0.3,), (0.0872, 0.2314), DEFAULT_INTENSITIES, (0.1, 0.4, 0.9, 1.6)])
def test_bound_interval_is_attained(intensities):
    # yields of one for every photon number above L put the whole interval into the error
    intensity_set = DecoyIntensitySet(intensities)
    L = intensity_set.L
    yields = np.zeros(80)
    yields[L + 1:] = 1.0
    estimate = estimate_single_photon_statistic(gains_from_yields(yields, intensity_set), intensity_set)
    assert (-1) ** (L + 1) * (estimate - yields[1]) == pytest.approx(bound_interval(intensity_set),
                                                                     rel=1e-9, abs=1e-14)
