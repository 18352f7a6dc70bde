"""Decoy-state linear estimator of single-photon statistics and its bounds.

The same coefficients serve scalar coincidence probabilities and binned
densities: every function is linear along axis 0 (the intensity axis,
vacuum first) and broadcasts over the remaining axes.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import NumericalError

logger = logging.getLogger(__name__)

DEFAULT_INTENSITIES = (0.0872, 0.2314, 0.9840)
BOUND_TOL = 1e-12


@dataclass(frozen=True)
class DecoyIntensitySet:
    """Intensities mu_1 < ... < mu_L; the vacuum mu_0 = 0 is implicit."""
    intensities: tuple

    def __post_init__(self):
        mu = tuple(float(m) for m in self.intensities)
        if len(mu) < 1:
            raise ValueError('at least one decoy intensity is required')
        if any(not m > 0 for m in mu):
            raise ValueError(f'decoy intensities must be positive, got {mu}')
        if len(set(mu)) != len(mu):
            raise ValueError(f'duplicate decoy intensity in {mu}')
        if list(mu) != sorted(mu):
            raise ValueError(f'decoy intensities must be strictly increasing, got {mu}')
        object.__setattr__(self, 'intensities', mu)

    @property
    def L(self):
        return len(self.intensities)

    @property
    def with_vacuum(self):
        return (0.0,) + self.intensities

    def term_weights(self):
        """a_j = mu_1...mu_L mu_j^-2 / prod_{i != j} (mu_i - mu_j)"""
        mu = np.array(self.intensities)
        weights = np.empty(self.L)
        for j in range(self.L):
            others = np.delete(mu, j)
            weights[j] = np.prod(mu) / mu[j] ** 2 / np.prod(others - mu[j])
        return weights

    def gain_coefficients(self):
        """c such that estimate = sum_k c_k Q_{mu_k}, k = 0..L (vacuum first)"""
        a = self.term_weights()
        return np.concatenate(([-np.sum(a)], a * np.exp(self.intensities)))

    def bound_interval(self):
        return bound_interval(self)


@dataclass(frozen=True)
class GainVector:
    """Measured statistic per intensity (vacuum first) with the sample counts behind it.

    Args:
        values: array of shape (L + 1, ...) of probabilities or densities
        counts: sample count per intensity
        kind: 'probability' or 'density'
    """
    values: np.ndarray
    counts: tuple = ()
    kind: str = 'probability'

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if self.kind not in ('probability', 'density'):
            raise ValueError(f'unknown gain kind {self.kind!r}')
        if np.any(values < 0) or (self.kind == 'probability' and np.any(values > 1)):
            raise ValueError(f'{self.kind} gains out of range')
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'counts', tuple(int(c) for c in self.counts))


@dataclass(frozen=True)
class BoundedEstimate:
    """Point estimate inside [lower, upper]; `raw` keeps the unclamped linear estimate."""
    estimate: float
    lower: float
    upper: float
    raw: float = None

    def __post_init__(self):
        if not self.lower <= self.estimate <= self.upper:
            raise ValueError(f'estimate {self.estimate} outside [{self.lower}, {self.upper}]')
        if self.raw is None:
            object.__setattr__(self, 'raw', self.estimate)

    @property
    def width(self):
        return self.upper - self.lower

    @classmethod
    def exact(cls, value):
        return cls(value, value, value)


def estimate_single_photon_statistic(gains, intensity_set):
    """Linear decoy estimate of the single-photon yield.

    estimate = mu_1...mu_L sum_j mu_j^-2 (e^{mu_j} Q_{mu_j} - Q_{mu_0}) / prod_{i != j} (mu_i - mu_j)
    """
    values = gains.values if isinstance(gains, GainVector) else np.asarray(gains, dtype=float)
    if values.shape[0] != intensity_set.L + 1:
        raise ValueError(f'expected gains for {intensity_set.L + 1} intensities (vacuum first), '
                         f'got {values.shape[0]}')
    estimate = np.tensordot(intensity_set.gain_coefficients(), values, axes=1)
    return float(estimate) if np.ndim(estimate) == 0 else estimate


def bound_interval(intensity_set):
    """Delta_L = (-1)^(L+1) mu_1...mu_L (sum_j mu_j^-2 (e^{mu_j} - 1) / prod_{i != j} (mu_i - mu_j) - 1)"""
    a = intensity_set.term_weights()
    delta = (-1) ** (intensity_set.L + 1) * (np.sum(a * np.expm1(intensity_set.intensities)) - 1.0)
    if delta < -BOUND_TOL:
        raise NumericalError(f'negative bound interval {delta:.3e} for intensities {intensity_set.intensities}')
    return max(float(delta), 0.0)


def bound_statistic(estimate, intensity_set, probability=True, delta=None):
    """Interval containing the true single-photon statistic.

    L odd: [estimate - Delta_L, estimate]; L even: [estimate, estimate + Delta_L].
    Probability statistics have their bounds clamped to [0, 1].
    """
    if delta is None:
        delta = bound_interval(intensity_set)
    if intensity_set.L % 2:
        lower, upper = estimate - delta, estimate
    else:
        lower, upper = estimate, estimate + delta
    if probability:
        lower = min(max(lower, 0.0), 1.0)
        upper = min(max(upper, 0.0), 1.0)
    return BoundedEstimate(min(max(estimate, lower), upper), lower, upper, estimate)


def gains_from_yields(yields, intensity_set):
    """Exact gains Q_mu = sum_n Y_n mu^n e^-mu / n! for every intensity (vacuum first).

    Args:
        yields: array of shape (n_max + 1, ...), yields[n] = Y_n
    """
    yields = np.asarray(yields, dtype=float)
    n = np.arange(yields.shape[0])
    rows = []
    for mu in intensity_set.with_vacuum:
        if mu == 0:
            weights = (n == 0).astype(float)
        else:
            weights = np.exp(n * np.log(mu) - mu - gammaln(n + 1))
        rows.append(np.tensordot(weights, yields, axes=1))
    return np.array(rows)
