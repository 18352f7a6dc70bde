"""Monte Carlo runs at full sample counts; deselect with -m "not slow"."""
import numpy as np
import pytest

from modpack.chsh import CHSH_SETTINGS, bin_coincidences, bounded_probabilities, chsh_from_correlations, \
    correlation, correlation_bounds, ideal_chsh, ideal_single_photon_correlation
from modpack.decoy_estimator import DEFAULT_INTENSITIES, DecoyIntensitySet
from modpack.homodyne_sim import MeasurementSettings, sample_batch
from modpack.states_channels import NoiseModel, TwoModeFockState, compensated_intensity
from modpack.tomography import DEFAULT_DTHETA_GRID, MleConfig, build_povm_elements, histogram_from_batches, \
    mle_reconstruct, multiphoton_mass, tomography_settings
from utils.utils import derive_seed

pytestmark = pytest.mark.slow

MASTER_SEED = 20240417


def _ideal_fock_batches(count, stream, photon_number=1, settings_list=None):
    settings_list = settings_list or [MeasurementSettings.chsh(a, b) for a, b in CHSH_SETTINGS]
    return [sample_batch(0.0, s, count, NoiseModel(), 'ideal-fock', derive_seed(MASTER_SEED, stream, i, 0),
                         photon_number=photon_number)
            for i, s in enumerate(settings_list)]


def test_monte_carlo_chsh_matches_quadrature_oracle():
    batches = _ideal_fock_batches(1_000_000, stream=11)
    for T in (0.0, 0.5, 0.82, 1.0):
        counts = [bin_coincidences(batch, T) for batch in batches]
        e = np.array([correlation(c) for c in counts])
        variance = sum((1 - ei * ei) / c.survivors for ei, c in zip(e, counts))
        s_mc = e[0] + e[1] + e[2] - e[3]
        assert abs(s_mc - ideal_chsh(T)) <= 3 * np.sqrt(variance)


def test_monte_carlo_correlation_matches_oracle_over_phase_grid():
    dthetas = np.linspace(-np.pi, np.pi, 9)
    settings_list = [MeasurementSettings(float(d), 0.0, i, 0) for i, d in enumerate(dthetas)]
    batches = _ideal_fock_batches(1_000_000, 17, settings_list=settings_list)
    for T in (0.0, 0.5, 1.0):
        for d, batch in zip(dthetas, batches):
            counts = bin_coincidences(batch, T)
            e = correlation(counts)
            # 27 comparisons in all, so 4 standard errors
            assert abs(e - ideal_single_photon_correlation(d, T)) <= 4 * np.sqrt((1 - e * e) / counts.survivors)


# At 10^6 records per decoy intensity S- at T=0.82 spreads by about 0.08 against a
# margin of about 0.1 above 2.5; four times the records halve the spread.
DECOY_CHSH_VACUUM_COUNT = 5_000_000
DECOY_CHSH_DECOY_COUNT = 4_000_000


def test_decoy_pipeline_violates_chsh_with_raised_counts():
    """Decoy CHSH at 5e6 vacuum and 4e6 per decoy intensity, one setting in memory at a time."""
    intensity_set = DecoyIntensitySet(DEFAULT_INTENSITIES)
    noise = NoiseModel()
    plan = [(0, 0.0, DECOY_CHSH_VACUUM_COUNT)] + [(k, mu, DECOY_CHSH_DECOY_COUNT)
                                                   for k, mu in enumerate(DEFAULT_INTENSITIES, start=1)]
    bounds = {0.25: [], 0.82: []}
    for index, (a, b) in enumerate(CHSH_SETTINGS):
        settings = MeasurementSettings.chsh(a, b)
        per_intensity = [sample_batch(compensated_intensity(mu, noise), settings, count, noise, 'equivalent',
                                      derive_seed(MASTER_SEED, 12, index, label), intensity_label=label)
                         for label, mu, count in plan]
        for T in bounds:
            bounds[T].append(correlation_bounds(*bounded_probabilities(per_intensity, intensity_set, T)))
        del per_intensity
    assert chsh_from_correlations(*bounds[0.25], T=0.25).s_est > 2
    assert chsh_from_correlations(*bounds[0.82], T=0.82).s_lower >= 2.5


def _reconstruct(photon_number, target):
    config = MleConfig(cutoff=3, max_iterations=1000)
    settings = tomography_settings(DEFAULT_DTHETA_GRID)
    batches = _ideal_fock_batches(100_000, 13 + photon_number, photon_number, settings)
    hist = histogram_from_batches(batches, settings, config.edges())
    return mle_reconstruct(hist, build_povm_elements(settings, config.edges(), 3), config, target)


def test_tomography_recovers_bell_state():
    result = _reconstruct(1, TwoModeFockState.bell_state(3))
    assert result.fidelity >= 0.98
    assert multiphoton_mass(result.rho) <= 0.03
    assert np.all(np.diff(result.log_likelihood) >= 0)


def test_tomography_recovers_vacuum():
    result = _reconstruct(0, TwoModeFockState.basis(0, 0, 3))
    assert result.fidelity >= 0.99
