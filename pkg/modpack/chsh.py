"""Threshold binning, bounded correlations and CHSH assembly.

Outcome 0 is assigned for x < -T, outcome 1 for x > T, the event is
discarded otherwise; a coincidence survives only if both arms survive.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .decoy_estimator import BoundedEstimate, GainVector, bound_interval, bound_statistic, \
    estimate_single_photon_statistic
from .errors import EmptySurvivorError, NumericalError
from .fock_core import EDGE_CLIP, hermite_functions
from .homodyne_sim import MeasurementSettings
from .states_channels import splitter_coefficients

logger = logging.getLogger(__name__)

OUTCOMES = ('00', '01', '10', '11')
# (label_a, label_b) in the order E(a0,b0), E(a1,b0), E(a0,b1), E(a1,b1)
CHSH_SETTINGS = ((0, 0), (1, 0), (0, 1), (1, 1))
DEFAULT_T_GRID = np.round(np.arange(0.0, 2.0 + 1e-9, 0.02), 10)
QUAD_LIMIT = 200


@dataclass(frozen=True)
class ThresholdBinning:
    T: float

    def __post_init__(self):
        if not self.T >= 0:
            raise ValueError(f'threshold T must be non-negative, got {self.T}')

    def outcomes(self, x):
        """0 / 1 per sample, -1 where discarded"""
        x = np.asarray(x)
        result = np.full(x.shape, -1, dtype=np.int8)
        result[x < -self.T] = 0
        result[x > self.T] = 1
        return result


@dataclass(frozen=True)
class CoincidenceCounts:
    n00: int
    n01: int
    n10: int
    n11: int
    n_discarded: int
    total: int

    def __post_init__(self):
        if self.n00 + self.n01 + self.n10 + self.n11 + self.n_discarded != self.total:
            raise ValueError('coincidence counts do not add up to the total')

    @property
    def survivors(self):
        return self.n00 + self.n01 + self.n10 + self.n11

    def probabilities(self):
        """(P00, P01, P10, P11) relative to every record, discarded included"""
        if self.total == 0:
            raise EmptySurvivorError('no records to bin')
        return tuple(n / self.total for n in (self.n00, self.n01, self.n10, self.n11))


@dataclass(frozen=True)
class CorrelationBound:
    e_est: float
    e_lower: float
    e_upper: float

    def __post_init__(self):
        if not -1 <= self.e_lower <= self.e_est <= self.e_upper <= 1:
            raise ValueError(f'invalid correlation bound ({self.e_lower}, {self.e_est}, {self.e_upper})')


@dataclass(frozen=True)
class ChshResult:
    """CHSH value at one threshold; invalid results carry None values."""
    T: float
    s_est: float = None
    s_lower: float = None
    s_upper: float = None
    reason: str = ''

    def __post_init__(self):
        if self.valid and not (self.s_lower <= self.s_est <= self.s_upper and abs(self.s_est) <= 4):
            raise ValueError(f'invalid CHSH result ({self.s_lower}, {self.s_est}, {self.s_upper})')

    @property
    def valid(self):
        return self.s_est is not None

    @classmethod
    def invalid(cls, T, reason):
        return cls(T, reason=reason)


def bin_coincidences(batch, T):
    """CoincidenceCounts of one SampleBatch at threshold T"""
    binning = ThresholdBinning(T)
    a = binning.outcomes(batch.x_a)
    b = binning.outcomes(batch.x_b)
    survived = (a >= 0) & (b >= 0)
    code = 2 * a[survived] + b[survived]
    n00, n01, n10, n11 = (int(c) for c in np.bincount(code, minlength=4))
    total = len(batch)
    return CoincidenceCounts(n00, n01, n10, n11, total - (n00 + n01 + n10 + n11), total)


def bin_batches(batches, T):
    """{key: CoincidenceCounts} for a mapping of batches"""
    return {key: bin_coincidences(batch, T) for key, batch in batches.items()}


def correlation(counts):
    """E = (n00 + n11 - n01 - n10) / (n00 + n11 + n01 + n10)"""
    if counts.survivors == 0:
        raise EmptySurvivorError('no coincidence survived the threshold')
    return (counts.n00 + counts.n11 - counts.n01 - counts.n10) / counts.survivors


def _clamp_unit(value):
    return min(max(value, -1.0), 1.0)


def correlation_bounds(p00, p01, p10, p11):
    """Bounded correlation from bounded coincidence probabilities.

    E+ = (P+00 + P+11 - P-01 - P-10) / D and E- = (P-00 + P-11 - P+01 - P+10) / D',
    where the denominator is the sum of lower bounds when the bounded
    numerator is non-negative and the sum of upper bounds otherwise.
    """
    same_est = p00.estimate + p11.estimate
    diff_est = p01.estimate + p10.estimate
    low_sum = p00.lower + p11.lower + p01.lower + p10.lower
    high_sum = p00.upper + p11.upper + p01.upper + p10.upper
    if same_est + diff_est <= 0:
        raise EmptySurvivorError('zero denominator in the correlation bound')

    def ratio(numerator, prefer_low):
        denominator = low_sum if prefer_low else high_sum
        if denominator <= 0:
            return float(np.sign(numerator))
        return _clamp_unit(numerator / denominator)

    upper_num = p00.upper + p11.upper - p01.lower - p10.lower
    lower_num = p00.lower + p11.lower - p01.upper - p10.upper
    e_est = _clamp_unit((same_est - diff_est) / (same_est + diff_est))
    e_upper = ratio(upper_num, prefer_low=upper_num >= 0)
    e_lower = ratio(lower_num, prefer_low=lower_num < 0)
    return CorrelationBound(e_est, min(e_lower, e_est), max(e_upper, e_est))


def chsh_from_correlations(e00, e10, e01, e11, T=None):
    """S = E(a0,b0) + E(a1,b0) + E(a0,b1) - E(a1,b1); the last term takes the opposite bound."""
    s_est = e00.e_est + e10.e_est + e01.e_est - e11.e_est
    s_upper = e00.e_upper + e10.e_upper + e01.e_upper - e11.e_lower
    s_lower = e00.e_lower + e10.e_lower + e01.e_lower - e11.e_upper
    return ChshResult(T, s_est, s_lower, s_upper)


# =============================================================================
# Quadrature oracle for an ideal Fock input
# =============================================================================

def _tail_overlaps(n, T):
    """O[j, k] = int_T^inf psi_j psi_k dx for j, k <= n, by adaptive quadrature"""
    overlaps = np.zeros((n + 1, n + 1))
    if T >= EDGE_CLIP:
        return overlaps
    for j in range(n + 1):
        for k in range(j, n + 1):
            value, _, info, *message = integrate.quad(
                lambda x: float(np.prod(hermite_functions(n, x)[[j, k]])),
                T, EDGE_CLIP, limit=QUAD_LIMIT, epsabs=1e-13, epsrel=1e-12, full_output=1)
            if message:
                raise NumericalError(f'quadrature did not converge for <{j}|x><x|{k}> on [{T}, inf): {message[0]}')
            overlaps[j, k] = overlaps[k, j] = value
    return overlaps


def ideal_fock_coincidences(n, dtheta, T):
    """(P00, P01, P10, P11) of |n> through the splitter, homodyned with phase difference dtheta.

    The joint density sum_{k,k'} c_k c_k' e^{i(k-k')dtheta} psi_k psi_k'(x_a) psi_{n-k} psi_{n-k'}(x_b)
    separates, so every window probability is a sum of products of 1-D integrals.
    """
    if not T >= 0:
        raise ValueError(f'threshold T must be non-negative, got {T}')
    c = splitter_coefficients(n)
    upper = _tail_overlaps(n, T)
    parity = (-1.0) ** np.add.outer(np.arange(n + 1), np.arange(n + 1))
    windows = {'0': parity * upper, '1': upper}
    probabilities = []
    for outcome in OUTCOMES:
        o_a, o_b = windows[outcome[0]], windows[outcome[1]]
        total = 0.0
        for k in range(n + 1):
            for kk in range(n + 1):
                total += c[k] * c[kk] * np.cos((k - kk) * dtheta) * o_a[k, kk] * o_b[n - k, n - kk]
        probabilities.append(max(total, 0.0))
    return tuple(probabilities)


def ideal_single_photon_correlation(dtheta, T):
    """E(dtheta, T) for a true single photon, the reference curve of the correlation scan"""
    p00, p01, p10, p11 = ideal_fock_coincidences(1, dtheta, T)
    survivors = p00 + p01 + p10 + p11
    if survivors <= 0:
        raise EmptySurvivorError(f'no survival probability at T={T}')
    return (p00 + p11 - p01 - p10) / survivors


def ideal_chsh(T, settings=None):
    """S(T) of a true single photon at the CHSH phases"""
    settings = settings or [MeasurementSettings.chsh(a, b) for a, b in CHSH_SETTINGS]
    e = [ideal_single_photon_correlation(s.dtheta, T) for s in settings]
    return e[0] + e[1] + e[2] - e[3]


def fit_visibility(dtheta, values):
    """Least-squares amplitude V of E(dtheta) = V cos(dtheta)"""
    c = np.cos(np.asarray(dtheta, dtype=float))
    denominator = float(np.sum(c * c))
    if denominator == 0:
        raise ValueError('phase grid carries no cosine component')
    return float(np.sum(c * np.asarray(values, dtype=float)) / denominator)


# =============================================================================
# Full pipeline from batches
# =============================================================================

def bounded_probabilities(batches, intensity_set, T):
    """Four BoundedEstimate coincidence probabilities of the single-photon component.

    Args:
        batches: SampleBatch list, vacuum first then one per decoy intensity;
                 a single batch (no decoy set) gives zero-width bounds
    """
    counts = [bin_coincidences(batch, T) for batch in batches]
    if all(c.survivors == 0 for c in counts):
        raise EmptySurvivorError(f'all coincidences discarded at T={T}')
    probabilities = np.array([c.probabilities() for c in counts])
    if intensity_set is None:
        return [BoundedEstimate.exact(float(p)) for p in probabilities[0]]
    gains = GainVector(probabilities, tuple(c.total for c in counts), 'probability')
    estimates = estimate_single_photon_statistic(gains, intensity_set)
    delta = bound_interval(intensity_set)
    return [bound_statistic(float(e), intensity_set, True, delta) for e in estimates]


def correlation_at(batches, intensity_set, T):
    return correlation_bounds(*bounded_probabilities(batches, intensity_set, T))


def scan_threshold(batches, intensity_set, T_grid, settings=CHSH_SETTINGS):
    """ChshResult per threshold, in grid order.

    Args:
        batches: {(label_a, label_b): [SampleBatch per intensity, vacuum first]}
        intensity_set: DecoyIntensitySet, or None for ideal-fock batches
    """
    missing = [key for key in settings if key not in batches]
    if missing:
        raise ValueError(f'missing batches for settings {missing}')
    expected = 1 if intensity_set is None else intensity_set.L + 1
    for key in settings:
        if len(batches[key]) != expected:
            raise ValueError(f'setting {key} has {len(batches[key])} batches, expected {expected}')
    results = []
    for T in T_grid:
        try:
            bounds = [correlation_at(batches[key], intensity_set, T) for key in settings]
        except EmptySurvivorError as e:
            logger.info('T=%.4g marked invalid: %s', T, e)
            results.append(ChshResult.invalid(float(T), str(e)))
            continue
        results.append(chsh_from_correlations(*bounds, T=float(T)))
    return results
