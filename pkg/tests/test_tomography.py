import numpy as np
import pytest
from scipy.special import erf

from modpack.decoy_estimator import DEFAULT_INTENSITIES, DecoyIntensitySet
from modpack.errors import DegenerateDataError
from modpack.fock_core import TruncatedOperator
from modpack.homodyne_sim import MeasurementSettings, SampleBatch, sample_batch
from modpack.states_channels import NoiseModel, TwoModeFockState
from modpack.tomography import DEFAULT_DTHETA_GRID, BinnedHistogram, MleConfig, build_povm_elements, \
    correct_densities, decoy_corrected_histogram, fidelity, histogram_from_batches, mle_reconstruct, multiphoton_mass, \
    photon_number_distribution, tomography_settings


def _bell_rho(cutoff=1):
    return TruncatedOperator.projector(cutoff, 2, TwoModeFockState.bell_state(cutoff).vector())


def test_config_edges():
    edges = MleConfig().edges()
    assert edges.size == 51
    assert edges[0] == -5.0 and edges[-1] == 5.0
    with pytest.raises(ValueError):
        MleConfig(cutoff=0)
    with pytest.raises(ValueError):
        MleConfig(tolerance=0.0)


def test_settings_grid():
    settings = tomography_settings(DEFAULT_DTHETA_GRID)
    assert len(settings) == 8
    assert all(s.phi_b == 0.0 for s in settings)
    assert settings[4].dtheta == 0.0


def test_single_infinite_bin_is_identity():
    povm = build_povm_elements([MeasurementSettings(0.4, 1.1)], [-np.inf, np.inf], 3)
    assert povm.element(0, 0, 0).max_abs_difference(TruncatedOperator.identity(3, 2)) < 1e-10


def test_cutoff_zero_elements_are_gaussian_masses():
    edges = np.array([-1.0, 0.0, 0.5, 2.0])
    povm = build_povm_elements([MeasurementSettings(0.0, 0.0)], edges, 0)
    mass = 0.5 * np.diff(erf(edges))
    for i in range(3):
        for k in range(3):
            assert povm.element(0, i, k).entries[0, 0].real == pytest.approx(mass[i] * mass[k], abs=1e-12)


def test_probabilities_are_traces_of_elements():
    settings = tomography_settings(DEFAULT_DTHETA_GRID[:3])
    povm = build_povm_elements(settings, np.linspace(-2, 2, 5), 1)
    rho = _bell_rho()
    probabilities = povm.probabilities(rho)
    for s in range(3):
        for i in range(4):
            for k in range(4):
                expected = np.trace(rho.entries @ povm.element(s, i, k).entries).real
                assert probabilities[s, i, k] == pytest.approx(expected, abs=1e-13)
    assert len(povm.as_list()) == 3 * 16


def test_bell_probabilities_depend_on_phase():
    edges = np.array([-np.inf, 0.0, np.inf])
    settings = [MeasurementSettings(0.0, 0.0), MeasurementSettings(np.pi, 0.0)]
    probabilities = build_povm_elements(settings, edges, 1).probabilities(_bell_rho())
    same_sign = probabilities[:, 0, 0] + probabilities[:, 1, 1]
    assert same_sign[0] == pytest.approx(0.5 + 1 / np.pi, abs=1e-8)
    assert same_sign[1] == pytest.approx(0.5 - 1 / np.pi, abs=1e-8)


def test_povm_completeness():
    config = MleConfig(cutoff=3)
    povm = build_povm_elements(tomography_settings(DEFAULT_DTHETA_GRID), config.edges(), 3)
    assert max(povm.completeness_defect(s) for s in range(8)) <= 1e-8


def test_overlapping_bins_rejected():
    with pytest.raises(ValueError):
        build_povm_elements([MeasurementSettings(0.0, 0.0)], [0.0, 1.0, 0.5], 1)


def test_fidelity_cases():
    target = TwoModeFockState.bell_state(1)
    assert fidelity(_bell_rho(), target) == pytest.approx(1.0)
    vacuum = TruncatedOperator.projector(1, 2, [1, 0, 0, 0])
    assert fidelity(vacuum, target) == 0.0
    assert fidelity(TruncatedOperator(1, 2, np.eye(4) / 4), target) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        fidelity(_bell_rho(2), target)


def test_multiphoton_mass_and_photon_numbers():
    rho = TruncatedOperator(2, 2, np.eye(9) / 9)
    assert multiphoton_mass(rho) == pytest.approx(1 / 3)
    assert multiphoton_mass(_bell_rho(3)) == pytest.approx(0.0, abs=1e-15)
    p_a, p_b = photon_number_distribution(_bell_rho())
    assert np.allclose(p_a, [0.5, 0.5]) and np.allclose(p_b, [0.5, 0.5])


def test_histogram_validation():
    settings = [MeasurementSettings(0.0, 0.0)]
    edges = np.linspace(-1, 1, 3)
    with pytest.raises(ValueError):
        BinnedHistogram(settings, edges, np.ones((1, 3, 3)))
    with pytest.raises(ValueError):
        BinnedHistogram(settings, edges, -np.ones((1, 2, 2)))
    with pytest.raises(DegenerateDataError):
        BinnedHistogram(settings, edges, np.zeros((1, 2, 2))).frequencies()


def _single_photon_density(edges):
    centers = 0.5 * (edges[:-1] + edges[1:])
    a, b = np.meshgrid(centers, centers, indexing='ij')
    density = (a * a + b * b) * np.exp(-a * a - b * b)
    widths = np.diff(edges)
    return density / np.sum(density * np.outer(widths, widths))


def test_decoy_correction_recovers_single_photon_density():
    intensity_set = DecoyIntensitySet(DEFAULT_INTENSITIES)
    edges = np.linspace(-3, 3, 13)
    vacuum = np.full((12, 12), 1.0 / 36)
    single = _single_photon_density(edges)
    mus = np.array(intensity_set.with_vacuum)
    densities = np.exp(-mus)[:, None, None] * (vacuum[None] + mus[:, None, None] * single[None])
    settings = [MeasurementSettings(0.0, 0.0)]
    hist = correct_densities(densities[None], intensity_set, settings, edges)
    assert not hist.degenerate
    assert np.allclose(hist.values[0], single, atol=1e-10)
    with pytest.raises(ValueError):
        correct_densities(densities[None, :3], intensity_set, settings, edges)


def _batch_from_masses(masses, centers, size, label, settings):
    """Records placed at bin centres so that the histogram reproduces `masses` up to rounding"""
    counts = np.rint(masses * size).astype(int)
    ia, ib = np.nonzero(counts)
    return SampleBatch(np.repeat(centers[ia], counts[ia, ib]), np.repeat(centers[ib], counts[ia, ib]),
                       label, settings, seed=0, pipeline='equivalent')


def test_decoy_corrected_histogram_from_batches():
    intensity_set = DecoyIntensitySet(DEFAULT_INTENSITIES)
    edges = np.linspace(-2, 2, 5)
    centers = 0.5 * (edges[:-1] + edges[1:])
    vacuum = np.full((4, 4), 1.0 / 16)
    single = (np.arange(16).reshape(4, 4) + 1.0) / 136
    singles = [single, single.T]
    settings = tomography_settings((0.0, np.pi / 2))

    def per_setting(s):
        # every pulse with at least one photon lands on the single-photon histogram
        return [_batch_from_masses(np.exp(-mu) * vacuum + -np.expm1(-mu) * singles[s], centers, 1_000_000,
                                   label, settings[s])
                for label, mu in enumerate(intensity_set.with_vacuum)]

    hist = decoy_corrected_histogram((per_setting(s) for s in range(2)), intensity_set, edges, settings)
    assert hist.kind == 'density' and not hist.degenerate
    assert hist.clamp_fraction == 0
    for s in range(2):
        assert np.allclose(hist.values[s], singles[s], atol=1e-4)
    with pytest.raises(ValueError):
        decoy_corrected_histogram([per_setting(0)[:3]], intensity_set, edges, settings[:1])
    with pytest.raises(ValueError):
        decoy_corrected_histogram([per_setting(0)], intensity_set, edges, settings)


def test_vacuum_only_data_is_degenerate():
    intensity_set = DecoyIntensitySet(DEFAULT_INTENSITIES)
    edges = np.linspace(-3, 3, 7)
    mus = np.array(intensity_set.with_vacuum)
    densities = np.exp(-mus)[:, None, None] * np.full((6, 6), 1.0 / 36)[None]
    settings = [MeasurementSettings(0.0, 0.0)]
    hist = correct_densities(densities[None], intensity_set, settings, edges)
    assert hist.degenerate
    povm = build_povm_elements(settings, edges, 1)
    with pytest.raises(DegenerateDataError):
        mle_reconstruct(hist, povm, MleConfig(cutoff=1))


def test_zero_iterations_returns_maximally_mixed_state():
    settings = tomography_settings(DEFAULT_DTHETA_GRID[:2])
    edges = np.linspace(-2, 2, 5)
    hist = BinnedHistogram(settings, edges, np.ones((2, 4, 4)))
    result = mle_reconstruct(hist, build_povm_elements(settings, edges, 1), MleConfig(cutoff=1, max_iterations=0))
    assert np.allclose(result.rho.entries, np.eye(4) / 4)
    assert result.fidelity == pytest.approx(0.25)
    assert result.iterations == 0 and not result.converged


def test_reconstruction_shape_checks():
    settings = tomography_settings(DEFAULT_DTHETA_GRID[:2])
    edges = np.linspace(-2, 2, 5)
    hist = BinnedHistogram(settings, edges, np.ones((2, 4, 4)))
    with pytest.raises(ValueError):
        mle_reconstruct(hist, build_povm_elements(settings, edges, 2), MleConfig(cutoff=1))
    with pytest.raises(ValueError):
        mle_reconstruct(hist, build_povm_elements(settings, np.linspace(-3, 3, 5), 1), MleConfig(cutoff=1))


def test_reconstruction_of_single_photon_data():
    config = MleConfig(cutoff=1, max_iterations=300, bin_width=0.5, x_range=4.0)
    settings = tomography_settings(DEFAULT_DTHETA_GRID)
    batches = [sample_batch(0.0, s, 20_000, NoiseModel(), 'ideal-fock', seed=40 + i)
               for i, s in enumerate(settings)]
    hist = histogram_from_batches(batches, settings, config.edges())
    result = mle_reconstruct(hist, build_povm_elements(settings, config.edges(), 1), config)
    assert np.all(np.diff(result.log_likelihood) >= 0)
    assert result.rho.trace() == pytest.approx(1.0, abs=1e-10)
    assert result.rho.eigenvalues()[0] > -1e-10
    assert result.fidelity > 0.9
