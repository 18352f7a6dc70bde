"""Binned homodyne tomography of the two-mode state.

POVM elements of a bin pair factorize per mode,
    Pi = int_{B_a} |x><x|_{phi_a} dx  (x)  int_{B_b} |x><x|_{phi_b} dx,
so only the 1-D bin operators are stored and every trace or sum over
elements is done with einsum on the reshaped (a, b, a', b') density matrix.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .decoy_estimator import GainVector, estimate_single_photon_statistic
from .errors import ConvergenceError, DegenerateDataError
from .fock_core import TruncatedOperator, hermite_functions, interval_overlaps, phase_matrix
from .homodyne_sim import MeasurementSettings
from .states_channels import TwoModeFockState

logger = logging.getLogger(__name__)

DEFAULT_DTHETA_GRID = tuple(np.pi / 4 * k for k in range(-4, 4))
DEGENERATE_MASS = 1e-9
MIN_PROBABILITY = 1e-300
MAX_DILUTION_STEPS = 30


@dataclass(frozen=True)
class MleConfig:
    cutoff: int = 10
    max_iterations: int = 2000
    tolerance: float = 1e-9
    bin_width: float = 0.2
    x_range: float = 5.0

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError(f'cutoff must be at least 1, got {self.cutoff}')
        if not self.tolerance > 0:
            raise ValueError(f'tolerance must be positive, got {self.tolerance}')
        if self.max_iterations < 0:
            raise ValueError(f'max_iterations must be non-negative, got {self.max_iterations}')
        if not self.bin_width > 0 or not self.x_range > 0:
            raise ValueError('bin_width and x_range must be positive')

    def edges(self):
        bins = int(round(2 * self.x_range / self.bin_width))
        return np.linspace(-self.x_range, self.x_range, bins + 1)


@dataclass(eq=False)
class BinnedHistogram:
    """Per-setting 2-D histogram over (x_a, x_b) with shared edges on both axes.

    Args:
        settings: MeasurementSettings per histogram
        edges: bin edges, strictly increasing
        values: array (n_settings, n_bins, n_bins) of counts or densities
        kind: 'counts' or 'density'
    """
    settings: list
    edges: np.ndarray
    values: np.ndarray
    kind: str = 'counts'
    clamp_fraction: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in ('counts', 'density'):
            raise ValueError(f'unknown histogram kind {self.kind!r}')
        if np.any(self.values < 0):
            raise ValueError('histogram values must be non-negative')
        nb = self.edges.size - 1
        if self.values.shape != (len(self.settings), nb, nb):
            raise ValueError(f'values shape {self.values.shape} does not match '
                             f'{len(self.settings)} settings x {nb} x {nb} bins')

    def bin_areas(self):
        widths = np.diff(self.edges)
        return np.outer(widths, widths)

    def masses(self):
        if self.kind == 'counts':
            return self.values
        return self.values * self.bin_areas()

    def frequencies(self):
        """Per-setting probability mass of every bin pair"""
        masses = self.masses()
        totals = masses.sum(axis=(1, 2), keepdims=True)
        if np.any(totals <= 0):
            raise DegenerateDataError('a setting carries no histogram mass')
        return masses / totals


@dataclass(eq=False)
class BinPovm:
    """Factorized POVM: mode_a[s, i] and mode_b[s, k] are the 1-D bin operators of setting s."""
    settings: list
    edges: np.ndarray
    cutoff: int
    mode_a: np.ndarray
    mode_b: np.ndarray

    @property
    def dim(self):
        return (self.cutoff + 1) ** 2

    def element(self, s, i, k):
        return TruncatedOperator(self.cutoff, 2, np.kron(self.mode_a[s, i], self.mode_b[s, k]))

    def as_list(self):
        """Every two-mode element, setting-major then bin order (small cutoffs only)"""
        nb = self.edges.size - 1
        return [self.element(s, i, k) for s in range(len(self.settings))
                for i in range(nb) for k in range(nb)]

    def complement(self, s):
        """Probability of landing outside the binned square, computed independently of the bins"""
        setting = self.settings[s]
        window_a = _mode_operator(self.edges[0], self.edges[-1], self.cutoff, setting.phi_a)
        window_b = _mode_operator(self.edges[0], self.edges[-1], self.cutoff, setting.phi_b)
        return TruncatedOperator(self.cutoff, 2, np.eye(self.dim) - np.kron(window_a, window_b))

    def completeness_defect(self, s):
        total = np.kron(self.mode_a[s].sum(axis=0), self.mode_b[s].sum(axis=0))
        total = total + self.complement(s).entries
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def probabilities(self, rho):
        """Tr(rho Pi) for every (setting, i, k)"""
        r = _as_tensor(rho, self.cutoff)
        return np.einsum('abcd,sica,skdb->sik', r, self.mode_a, self.mode_b, optimize=True).real

    def weighted_sum(self, weights):
        """sum_{s,i,k} w[s, i, k] Pi_{s,i,k} as a (dim, dim) matrix"""
        d = self.cutoff + 1
        r = np.einsum('sik,siac,skbd->abcd', weights, self.mode_a, self.mode_b, optimize=True)
        return r.reshape(d * d, d * d)


@dataclass(eq=False)
class TomographyResult:
    rho: TruncatedOperator
    log_likelihood: list
    fidelity: float = None
    converged: bool = False
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


def _as_tensor(rho, cutoff):
    d = cutoff + 1
    entries = rho.entries if isinstance(rho, TruncatedOperator) else np.asarray(rho)
    return entries.reshape(d, d, d, d)


def _mode_operator(lo, hi, cutoff, phi):
    """int_lo^hi |x><x|_phi dx with entries conj(psi_m) psi_n"""
    return interval_overlaps(lo, hi, cutoff) * phase_matrix(cutoff, phi)


def tomography_settings(dtheta_grid):
    """phi_a = dtheta, phi_b = 0 for each phase difference"""
    return [MeasurementSettings(float(d), 0.0, i, 0) for i, d in enumerate(dtheta_grid)]


def _check_edges(edges):
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError('at least two bin edges are required')
    if np.any(np.diff(edges) <= 0):
        raise ValueError('bin edges must be strictly increasing (overlapping or empty bins)')
    return edges


def build_povm_elements(settings, edges, cutoff):
    """Factorized bin POVM for every setting; see BinPovm.as_list for explicit elements."""
    edges = _check_edges(edges)
    if cutoff < 0:
        raise ValueError(f'cutoff must be non-negative, got {cutoff}')
    base = np.array([interval_overlaps(lo, hi, cutoff) for lo, hi in zip(edges[:-1], edges[1:])])
    mode_a = np.array([base * phase_matrix(cutoff, s.phi_a) for s in settings])
    mode_b = np.array([base * phase_matrix(cutoff, s.phi_b) for s in settings])
    return BinPovm(list(settings), edges, cutoff, mode_a, mode_b)


def histogram_batch(batch, edges):
    counts, _, _ = np.histogram2d(batch.x_a, batch.x_b, bins=[edges, edges])
    return counts


def histogram_from_batches(batches, settings, edges):
    """Plain count histograms, one batch per setting (ideal-fock data)"""
    edges = _check_edges(edges)
    values = np.array([histogram_batch(batch, edges) for batch in batches])
    return BinnedHistogram(list(settings), edges, values, 'counts')


def correct_densities(densities, intensity_set, settings, edges):
    """Decoy correction of per-intensity bin densities.

    Args:
        densities: array (n_settings, L + 1, n_bins, n_bins), vacuum first
    """
    edges = _check_edges(edges)
    densities = np.asarray(densities, dtype=float)
    if densities.shape[1] != intensity_set.L + 1:
        raise ValueError(f'missing intensity data: expected {intensity_set.L + 1} intensities, '
                         f'got {densities.shape[1]}')
    widths = np.diff(edges)
    areas = np.outer(widths, widths)
    corrected = np.empty((densities.shape[0],) + densities.shape[2:])
    clamped = 0
    degenerate = False
    for s, per_intensity in enumerate(densities):
        estimate = estimate_single_photon_statistic(GainVector(per_intensity, kind='density'), intensity_set)
        clamped += int(np.count_nonzero(estimate < 0))
        estimate = np.clip(estimate, 0.0, None)
        mass = float(np.sum(estimate * areas))
        if mass <= DEGENERATE_MASS:
            logger.warning('setting %d: corrected histogram carries no mass (%.3e)', s, mass)
            degenerate = True
            corrected[s] = estimate
        else:
            corrected[s] = estimate / mass
    clamp_fraction = clamped / corrected.size
    if clamp_fraction:
        logger.info('decoy correction clamped %.2f%% of bins', 100 * clamp_fraction)
    return BinnedHistogram(list(settings), edges, corrected, 'density', clamp_fraction, degenerate)


def decoy_corrected_histogram(batches, intensity_set, edges, settings):
    """Single-photon densities from per-intensity batches.

    Args:
        batches: per setting, a list of SampleBatch with vacuum first. May be
            a generator; each setting is histogrammed and released before the next.
    """
    edges = _check_edges(edges)
    widths = np.diff(edges)
    areas = np.outer(widths, widths)
    nb = edges.size - 1
    densities = np.empty((len(settings), intensity_set.L + 1, nb, nb))
    count = 0
    for s, per_intensity in enumerate(batches):
        if s >= len(settings):
            raise ValueError(f'more batch groups than the {len(settings)} settings')
        if len(per_intensity) != intensity_set.L + 1:
            raise ValueError(f'setting {s}: missing intensity data, got {len(per_intensity)} batches '
                             f'for {intensity_set.L + 1} intensities')
        for k, batch in enumerate(per_intensity):
            if len(batch) == 0:
                raise DegenerateDataError(f'setting {s}: empty batch at intensity {k}')
            densities[s, k] = histogram_batch(batch, edges) / (len(batch) * areas)
        count += 1
    if count != len(settings):
        raise ValueError(f'got batches for {count} of {len(settings)} settings')
    return correct_densities(densities, intensity_set, settings, edges)


def _log_likelihood(frequencies, probabilities):
    mask = frequencies > 0
    return float(np.sum(frequencies[mask] * np.log(np.maximum(probabilities[mask], MIN_PROBABILITY))))


def _normalized(matrix):
    matrix = 0.5 * (matrix + matrix.conj().T)
    return matrix / np.trace(matrix).real


def mle_reconstruct(hist, povm, config, target=None):
    """Iterative R rho R maximum-likelihood reconstruction.

    Starts from the maximally mixed state. A step that would lower the
    likelihood is replaced by the diluted update (I + eps R) rho (I + eps R)
    with eps halved until the likelihood does not decrease.
    """
    if hist.degenerate:
        raise DegenerateDataError('cannot reconstruct from a degenerate histogram')
    if povm.cutoff != config.cutoff:
        raise ValueError(f'POVM cutoff {povm.cutoff} differs from config cutoff {config.cutoff}')
    if len(hist.settings) != len(povm.settings) or not np.array_equal(hist.edges, povm.edges):
        raise ValueError('histogram and POVM do not share settings and bins')
    frequencies = hist.frequencies()
    dim = povm.dim
    identity = np.eye(dim)
    rho = identity / dim
    log_likelihood = [_log_likelihood(frequencies, povm.probabilities(rho))]
    converged = False
    iteration = 0
    for iteration in range(1, config.max_iterations + 1):
        probabilities = povm.probabilities(rho)
        weights = np.where(frequencies > 0, frequencies / np.maximum(probabilities, MIN_PROBABILITY), 0.0)
        r = povm.weighted_sum(weights)
        candidate = _normalized(r @ rho @ r)
        value = _log_likelihood(frequencies, povm.probabilities(candidate))
        epsilon = 1.0
        steps = 0
        while value < log_likelihood[-1] and steps < MAX_DILUTION_STEPS:
            diluted = (identity + epsilon * r) / (1.0 + epsilon)
            candidate = _normalized(diluted @ rho @ diluted)
            value = _log_likelihood(frequencies, povm.probabilities(candidate))
            epsilon *= 0.5
            steps += 1
        if not np.isfinite(value) or value < log_likelihood[-1]:
            raise ConvergenceError(f'log-likelihood decreased at iteration {iteration}',
                                   (log_likelihood + [value])[-10:])
        rho = candidate
        increase = value - log_likelihood[-1]
        log_likelihood.append(value)
        if increase < config.tolerance:
            converged = True
            break
    if not converged and config.max_iterations > 0:
        trace = ', '.join(f'{v:.10g}' for v in log_likelihood[-10:])
        logger.warning('MLE stopped after %d iterations without convergence; last values: %s',
                       config.max_iterations, trace)
    result = TruncatedOperator(config.cutoff, 2, rho)
    target = target or TwoModeFockState.bell_state(config.cutoff)
    return TomographyResult(result, log_likelihood, fidelity(result, target), converged, iteration,
                            {'clamp_fraction': hist.clamp_fraction})


def fidelity(rho, target):
    """<psi| rho |psi> for a pure target"""
    if rho.modes != 2 or rho.cutoff != target.cutoff:
        raise ValueError(f'dimension mismatch: rho cutoff {rho.cutoff} ({rho.modes} modes), '
                         f'target cutoff {target.cutoff}')
    v = target.vector()
    value = float(np.real(v.conj() @ rho.entries @ v))
    return min(max(value, 0.0), 1.0)


def _total_photons(cutoff):
    j, k = np.divmod(np.arange((cutoff + 1) ** 2), cutoff + 1)
    return j + k


def multiphoton_mass(rho):
    """Probability of more than two photons in total"""
    diagonal = np.real(np.diag(rho.entries))
    return float(np.sum(diagonal[_total_photons(rho.cutoff) > 2]))


def photon_number_distribution(rho):
    """(P_A(n), P_B(n)) single-mode photon-number distributions of a two-mode rho"""
    d = rho.cutoff + 1
    diagonal = np.real(np.diag(rho.entries)).reshape(d, d)
    return diagonal.sum(axis=1), diagonal.sum(axis=0)


def marginal_density(rho, x, phi=0.0, mode=0):
    """Quadrature density of one mode of a two-mode rho at LO phase phi"""
    d = rho.cutoff + 1
    r = _as_tensor(rho, rho.cutoff)
    reduced = np.einsum('abcb->ac', r) if mode == 0 else np.einsum('abad->bd', r)
    single = TruncatedOperator(rho.cutoff, 1, reduced)
    psi = hermite_functions(rho.cutoff, x) * np.exp(1j * np.arange(d) * phi).reshape((d,) + (1,) * np.ndim(x))
    return np.real(np.einsum('m...,mn,n...->...', psi, single.entries, psi.conj()))
