"""Source and channel models: phase-randomized coherent states, the 50:50
splitter acting on Fock states, and the loss-equivalent reduction of
photodiode inefficiency and electronic noise."""
from dataclasses import dataclass

import numpy as np
from scipy.special import comb
from scipy.stats import poisson

NORM_TOL = 1e-12


@dataclass(frozen=True)
class PhaseRandomizedSource:
    """Poisson mixture of Fock states with mean photon number mu"""
    mu: float

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f'intensity mu must be non-negative, got {self.mu}')

    def weights(self, cutoff):
        return poisson_weights(self.mu, cutoff)


@dataclass(frozen=True)
class NoiseModel:
    """Balanced homodyne detector imperfections (same for both detectors).

    Args:
        eta_pd: photodiode transmittance in (0, 1]
        v_e: electronic noise variance in shot-noise units, i.e. as a multiple
            of the vacuum quadrature variance
    """
    eta_pd: float = 1.0
    v_e: float = 0.0

    def __post_init__(self):
        if not 0 < self.eta_pd <= 1:
            raise ValueError(f'eta_pd must lie in (0, 1], got {self.eta_pd}')
        if not self.v_e >= 0:
            raise ValueError(f'electronic noise variance v_e must be non-negative, got {self.v_e}')

    @classmethod
    def from_eta_ele(cls, eta_pd, eta_ele):
        """Noise model whose electronic noise is equivalent to a loss eta_ele"""
        if not 0 < eta_ele <= 1:
            raise ValueError(f'eta_ele must lie in (0, 1], got {eta_ele}')
        return cls(eta_pd, 1.0 / eta_ele - 1.0)

    @property
    def eta_ele(self):
        return electronic_noise_equivalent(self.v_e)[0]

    @property
    def eta_tot(self):
        return self.eta_pd * self.eta_ele


@dataclass(frozen=True, eq=False)
class TwoModeFockState:
    """Pure state sum_{j,k <= N} c[j, k] |j>_A |k>_B"""
    cutoff: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=np.complex128)
        if amplitudes.shape != (self.cutoff + 1, self.cutoff + 1):
            raise ValueError(f'amplitudes must have shape {(self.cutoff + 1,) * 2}, got {amplitudes.shape}')
        norm = np.sqrt(np.sum(np.abs(amplitudes) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f'state is not normalized: |psi| = {norm:.15g}')
        amplitudes.setflags(write=False)
        object.__setattr__(self, 'amplitudes', amplitudes)

    @classmethod
    def basis(cls, j, k, cutoff):
        amplitudes = np.zeros((cutoff + 1, cutoff + 1))
        amplitudes[j, k] = 1.0
        return cls(cutoff, amplitudes)

    @classmethod
    def bell_state(cls, cutoff=1):
        """(|0>_A|1>_B + |1>_A|0>_B) / sqrt(2)"""
        return splitter_output(1, cutoff)

    def vector(self):
        return self.amplitudes.reshape(-1)

    def photon_numbers(self):
        """Total photon number j + k of every basis state carrying amplitude"""
        j, k = np.nonzero(np.abs(self.amplitudes) > 0)
        return set((j + k).tolist())


def poisson_weights(mu, cutoff):
    """Photon-number distribution mu^n e^-mu / n! for n <= cutoff.

    Returns:
        (weights, tail) with tail the probability of more than `cutoff` photons
    """
    if not mu >= 0:
        raise ValueError(f'intensity mu must be non-negative, got {mu}')
    n = np.arange(cutoff + 1)
    if mu == 0:
        weights = (n == 0).astype(float)
        return weights, 0.0
    weights = poisson.pmf(n, mu)
    return weights, float(poisson.sf(cutoff, mu))


def splitter_output(n, cutoff):
    """|n> through a symmetric 50:50 splitter with real amplitudes.

    a^dagger -> (a^dagger + b^dagger) / sqrt(2), hence
    |n, 0> -> sum_k sqrt(C(n, k) / 2^n) |k, n - k>.
    """
    if n < 0:
        raise ValueError(f'photon number must be non-negative, got {n}')
    if n > cutoff:
        raise ValueError(f'photon number {n} exceeds cutoff {cutoff}')
    amplitudes = np.zeros((cutoff + 1, cutoff + 1))
    for k in range(n + 1):
        amplitudes[k, n - k] = np.sqrt(comb(n, k, exact=True) / 2.0 ** n)
    return TwoModeFockState(cutoff, amplitudes)


def splitter_coefficients(n):
    """Real amplitudes c_k of |k, n - k> in splitter_output(n)"""
    amplitudes = splitter_output(n, n).amplitudes.real
    return np.array([amplitudes[k, n - k] for k in range(n + 1)])


def loss_on_coherent(mu, eta):
    """A loss of transmittance eta maps a coherent (or phase-randomized) intensity mu to mu * eta."""
    if not 0 <= eta <= 1:
        raise ValueError(f'transmittance eta must lie in [0, 1], got {eta}')
    return mu * eta


def electronic_noise_equivalent(v_e):
    """Loss equivalent to additive Gaussian electronic noise.

    A measured quadrature m = x + g with Var(g) = v_e / 2 rescaled by
    sqrt(eta) has the variance of a loss channel eta V + (1 - eta) / 2 iff
    eta = 1 / (1 + v_e).

    Returns:
        (eta_ele, rescale) with rescale = sqrt(eta_ele)
    """
    if not v_e >= 0:
        raise ValueError(f'electronic noise variance v_e must be non-negative, got {v_e}')
    eta_ele = 1.0 / (1.0 + v_e)
    return eta_ele, float(np.sqrt(eta_ele))


def compensated_intensity(mu_target, noise):
    """Source intensity that reaches mu_target after the total equivalent loss"""
    if noise.eta_tot <= 0:
        raise ValueError('total transmittance eta_tot must be positive')
    return mu_target / noise.eta_tot
