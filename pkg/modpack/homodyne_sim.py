"""Monte Carlo homodyne sampling and analytic joint densities.

Outcome scale: a coherent state alpha measured at LO phase phi gives
x ~ Normal(sqrt(2) Re(alpha e^{-i phi}), 1/2), matching the vacuum variance
convention of fock_core.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NumericalError
from .fock_core import MAX_PHOTON_NUMBER, hermite_functions
from .states_channels import NoiseModel, splitter_coefficients

logger = logging.getLogger(__name__)

PIPELINES = ('physical', 'equivalent', 'ideal-fock')
CHUNK_SIZE = 2 ** 16
VACUUM_SD = np.sqrt(0.5)

# CHSH local oscillator phases indexed by setting label
A_PHASES = (0.0, np.pi / 2)
B_PHASES = (np.pi / 4, -np.pi / 4)

# rejection sampler envelope search
ENVELOPE_GRID = np.linspace(-9.0, 9.0, 721)
ENVELOPE_MARGIN = 1.1


@dataclass(frozen=True)
class MeasurementSettings:
    """LO phases of Alice and Bob and the labels under which they are recorded"""
    phi_a: float
    phi_b: float
    label_a: int = 0
    label_b: int = 0

    @classmethod
    def chsh(cls, label_a, label_b):
        return cls(A_PHASES[label_a], B_PHASES[label_b], label_a, label_b)

    @property
    def dtheta(self):
        return self.phi_a - self.phi_b


@dataclass(frozen=True)
class SampleRecord:
    x_a: float
    x_b: float
    intensity_label: int
    setting_a: int
    setting_b: int


@dataclass(eq=False)
class SampleBatch:
    """Joint quadrature outcomes stored column-wise.

    The state phase is never stored: it is not accessible to the detectors.
    """
    x_a: np.ndarray
    x_b: np.ndarray
    intensity_label: int
    settings: MeasurementSettings
    seed: int
    pipeline: str
    mu: float = 0.0
    noise: NoiseModel = field(default_factory=NoiseModel)
    photon_number: int = None

    def __post_init__(self):
        self.x_a = np.asarray(self.x_a, dtype=float)
        self.x_b = np.asarray(self.x_b, dtype=float)
        if self.x_a.shape != self.x_b.shape or self.x_a.ndim != 1:
            raise ValueError('x_a and x_b must be 1-D arrays of equal length')

    def __len__(self):
        return self.x_a.size

    @property
    def records(self):
        return [SampleRecord(float(a), float(b), self.intensity_label,
                             self.settings.label_a, self.settings.label_b)
                for a, b in zip(self.x_a, self.x_b)]


def _check_pipeline(pipeline):
    if pipeline not in PIPELINES:
        raise ValueError(f'unknown pipeline {pipeline!r}; expected one of {PIPELINES}')


def sample_coherent_pair(mu, theta, settings, noise, pipeline, rng):
    """Homodyne outcomes of |sqrt(mu) e^{i theta}> split 50:50.

    `theta` may be an array; one outcome pair is drawn per element.

    Pipelines:
        equivalent: all loss in front of the splitter, ideal detectors
        physical: photodiode loss per arm, additive electronic noise
                  Normal(0, v_e / 2), then rescaling by sqrt(eta_ele)
    """
    if not mu >= 0:
        raise ValueError(f'intensity mu must be non-negative, got {mu}')
    _check_pipeline(pipeline)
    if pipeline == 'ideal-fock':
        raise ValueError('the ideal-fock pipeline has no coherent input; use sample_fock_pair')
    theta = np.asarray(theta, dtype=float)
    cos_a = np.cos(theta - settings.phi_a)
    cos_b = np.cos(theta - settings.phi_b)
    if pipeline == 'equivalent':
        z = rng.standard_normal((2,) + theta.shape)
        amplitude = np.sqrt(mu * noise.eta_tot)
        x_a = amplitude * cos_a + VACUUM_SD * z[0]
        x_b = amplitude * cos_b + VACUUM_SD * z[1]
    else:
        z = rng.standard_normal((4,) + theta.shape)
        amplitude = np.sqrt(mu * noise.eta_pd)
        noise_sd = np.sqrt(noise.v_e / 2.0)
        rescale = np.sqrt(noise.eta_ele)
        x_a = rescale * (amplitude * cos_a + VACUUM_SD * z[0] + noise_sd * z[2])
        x_b = rescale * (amplitude * cos_b + VACUUM_SD * z[1] + noise_sd * z[3])
    if theta.ndim == 0:
        return float(x_a), float(x_b)
    return x_a, x_b


def _check_fock(n, cutoff):
    if n < 0:
        raise ValueError(f'photon number must be non-negative, got {n}')
    if n > cutoff:
        raise ValueError(f'photon number {n} exceeds cutoff {cutoff}')


def _fock_amplitude(n, x_a, x_b, dtheta):
    """sum_k c_k psi_k(x_a) psi_{n-k}(x_b) e^{i k dtheta}, global phase e^{i n phi_b} dropped"""
    coefficients = splitter_coefficients(n)
    psi_a = hermite_functions(n, x_a)
    psi_b = hermite_functions(n, x_b)
    amplitude = np.zeros(np.broadcast(np.asarray(x_a), np.asarray(x_b)).shape, dtype=np.complex128)
    for k in range(n + 1):
        amplitude = amplitude + coefficients[k] * np.exp(1j * k * dtheta) * psi_a[k] * psi_b[n - k]
    return amplitude


def joint_pdf_fock(n, x_a, x_b, dtheta, cutoff=MAX_PHOTON_NUMBER):
    """Density of (x_a, x_b) when |n> enters the splitter; depends on phases only via dtheta."""
    _check_fock(n, cutoff)
    density = np.abs(_fock_amplitude(n, x_a, x_b, dtheta)) ** 2
    return float(density) if density.ndim == 0 else density


def marginal_pdf_fock(n, x, cutoff=MAX_PHOTON_NUMBER):
    """Single-mode marginal sum_k |c_k|^2 psi_k(x)^2 of joint_pdf_fock"""
    _check_fock(n, cutoff)
    weights = splitter_coefficients(n) ** 2
    psi = hermite_functions(n, x)
    return np.tensordot(weights, psi ** 2, axes=1)


@lru_cache(maxsize=None)
def envelope_constant(n):
    """Bound M on p(x_a, x_b) / q(x_a, x_b) with q the product of two Normal(0, 1).

    Uses |sum_k c_k u_k|^2 <= (sum_k |c_k| |u_k|)^2, which holds for every
    dtheta, evaluated on a grid and widened by ENVELOPE_MARGIN.
    """
    a, b = np.meshgrid(ENVELOPE_GRID, ENVELOPE_GRID, indexing='ij')
    coefficients = splitter_coefficients(n)
    psi_a = hermite_functions(n, a)
    psi_b = hermite_functions(n, b)
    bound = sum(abs(coefficients[k]) * np.abs(psi_a[k] * psi_b[n - k]) for k in range(n + 1)) ** 2
    proposal = np.exp(-0.5 * (a * a + b * b)) / (2 * np.pi)
    return float(ENVELOPE_MARGIN * np.max(bound / proposal))


def sample_fock_pair(n, dtheta, rng, size=None, cutoff=MAX_PHOTON_NUMBER):
    """Rejection sampler for joint_pdf_fock with a product Normal(0, 1) envelope."""
    _check_fock(n, cutoff)
    count = 1 if size is None else int(size)
    if n == 0:
        x = VACUUM_SD * rng.standard_normal((2, count))
    else:
        m = envelope_constant(n)
        x = np.empty((2, count))
        filled = 0
        while filled < count:
            need = count - filled
            draw = int(np.ceil(need * m * 1.1)) + 16
            candidate = rng.standard_normal((2, draw))
            u = rng.random(draw)
            proposal = np.exp(-0.5 * (candidate[0] ** 2 + candidate[1] ** 2)) / (2 * np.pi)
            ratio = joint_pdf_fock(n, candidate[0], candidate[1], dtheta, cutoff) / (m * proposal)
            if np.any(ratio > 1.0):
                raise NumericalError(f'envelope constant {m:.4g} too small for n={n}: '
                                     f'ratio reaches {np.max(ratio):.4g}')
            accepted = candidate[:, u < ratio][:, :need]
            x[:, filled:filled + accepted.shape[1]] = accepted
            filled += accepted.shape[1]
    if size is None:
        return float(x[0, 0]), float(x[1, 0])
    return x[0], x[1]


def chunk_generator(seed, chunk_index):
    """Counter-based stream owned by one chunk of a batch"""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(chunk_index),))
    return np.random.Generator(np.random.Philox(sequence))


def draw_chunk(pipeline, mu, settings, noise, size, rng, photon_number=1):
    """One chunk of outcome pairs; theta ~ Uniform[0, 2 pi) per record for coherent input."""
    _check_pipeline(pipeline)
    if pipeline == 'ideal-fock':
        return sample_fock_pair(photon_number, settings.dtheta, rng, size=size)
    theta = rng.uniform(0.0, 2 * np.pi, size)
    return sample_coherent_pair(mu, theta, settings, noise, pipeline, rng)


def chunk_bounds(count, chunk_size=CHUNK_SIZE):
    """[(start, stop), ...] covering range(count) in chunks of chunk_size"""
    starts = range(0, count, chunk_size)
    return [(start, min(start + chunk_size, count)) for start in starts]


def sample_batch(mu, settings, count, noise, pipeline, seed, intensity_label=0,
                 photon_number=1, chunk_size=CHUNK_SIZE):
    """Deterministic batch of `count` records; chunk c uses chunk_generator(seed, c)."""
    if count < 1:
        raise ValueError(f'count must be at least 1, got {count}')
    _check_pipeline(pipeline)
    x_a = np.empty(count)
    x_b = np.empty(count)
    for index, (start, stop) in enumerate(chunk_bounds(count, chunk_size)):
        rng = chunk_generator(seed, index)
        x_a[start:stop], x_b[start:stop] = draw_chunk(pipeline, mu, settings, noise, stop - start,
                                                      rng, photon_number)
    return SampleBatch(x_a, x_b, intensity_label, settings, seed, pipeline, mu, noise,
                       photon_number if pipeline == 'ideal-fock' else None)
