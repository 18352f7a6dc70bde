"""Quadrature representation of truncated Fock spaces.

Conventions shared by every module of the package:
    - vacuum quadrature variance is 1/2, i.e. <x|0> = pi^(-1/4) exp(-x^2/2);
      thresholds T are expressed on this x scale (shot-noise units);
    - the quadrature wavefunction at local oscillator phase theta is
      psi_n(x, theta) = pi^(-1/4) (2^n n!)^(-1/2) H_n(x) exp(-x^2/2) exp(i n theta);
    - two-mode operators are stored with mode A as the slow index,
      basis |j, k> -> j * (N + 1) + k.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalError

logger = logging.getLogger(__name__)

MAX_PHOTON_NUMBER = 16
# psi_16 is below 1e-30 outside this range
EDGE_CLIP = 15.0
PANEL_WIDTH = 0.5
PANEL_ORDER = 20
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
SQRT_EIGEN_TOL = 1e-8


@dataclass(frozen=True)
class QuadratureWavefunction:
    """psi_n(x, theta) as a callable"""
    n: int
    theta: float = 0.0

    def __post_init__(self):
        _check_photon_number(self.n)

    def __call__(self, x):
        return wavefunction_value(self.n, x, self.theta)


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Complex matrix on a one- or two-mode Fock space cut at `cutoff` photons per mode."""
    cutoff: int
    modes: int
    entries: np.ndarray

    def __post_init__(self):
        if self.modes not in (1, 2):
            raise ValueError(f'modes must be 1 or 2, got {self.modes}')
        if self.cutoff < 0:
            raise ValueError(f'cutoff must be non-negative, got {self.cutoff}')
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.shape != (self.dim, self.dim):
            raise ValueError(f'entries shape {entries.shape} does not match dimension {self.dim}')
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

    @property
    def dim(self):
        return (self.cutoff + 1) ** self.modes

    @classmethod
    def identity(cls, cutoff, modes=1):
        return cls(cutoff, modes, np.eye((cutoff + 1) ** modes))

    @classmethod
    def projector(cls, cutoff, modes, amplitudes):
        """|v><v| for a state vector given in the truncated basis"""
        v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        return cls(cutoff, modes, np.outer(v, v.conj()))

    def dagger(self):
        return TruncatedOperator(self.cutoff, self.modes, self.entries.conj().T)

    def trace(self):
        return complex(np.trace(self.entries))

    def is_hermitian(self, tol=HERMITIAN_TOL):
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def eigenvalues(self):
        """Eigenvalues of the Hermitian part, ascending"""
        hermitian = 0.5 * (self.entries + self.entries.conj().T)
        return np.linalg.eigvalsh(hermitian)

    def max_abs_difference(self, other):
        return float(np.max(np.abs(self.entries - other.entries), initial=0.0))

    def __add__(self, other):
        self._check_compatible(other)
        return TruncatedOperator(self.cutoff, self.modes, self.entries + other.entries)

    def __sub__(self, other):
        self._check_compatible(other)
        return TruncatedOperator(self.cutoff, self.modes, self.entries - other.entries)

    def __matmul__(self, other):
        self._check_compatible(other)
        return TruncatedOperator(self.cutoff, self.modes, self.entries @ other.entries)

    def _check_compatible(self, other):
        if (self.cutoff, self.modes) != (other.cutoff, other.modes):
            raise ValueError(f'incompatible operators: cutoff/modes {self.cutoff}/{self.modes} '
                             f'vs {other.cutoff}/{other.modes}')


def _check_photon_number(n):
    if n < 0 or int(n) != n:
        raise ValueError(f'photon number must be a non-negative integer, got {n}')
    if n > MAX_PHOTON_NUMBER:
        raise ValueError(f'photon number {n} above supported maximum {MAX_PHOTON_NUMBER}')


def hermite_functions(n_max, x):
    """Real oscillator eigenfunctions psi_0..psi_{n_max} at theta = 0.

    Uses the normalized three-term recurrence
        psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1},
    so no factorial or raw Hermite value is ever formed.

    Returns:
        array of shape (n_max + 1,) + shape(x)
    """
    x = np.asarray(x, dtype=float)
    values = np.empty((n_max + 1,) + x.shape)
    values[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        values[1] = np.sqrt(2.0) * x * values[0]
    for n in range(1, n_max):
        values[n + 1] = np.sqrt(2.0 / (n + 1)) * x * values[n] - np.sqrt(n / (n + 1)) * values[n - 1]
    return values


def wavefunction_value(n, x, theta=0.0):
    """psi_n(x, theta); scalar in, complex scalar out (arrays broadcast)."""
    _check_photon_number(n)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError('quadrature value must be finite')
    value = hermite_functions(n, x)[n] * np.exp(1j * n * theta)
    return complex(value) if value.ndim == 0 else value


@lru_cache(maxsize=None)
def _legendre_rule(order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_rule(lo, hi, panel_width=PANEL_WIDTH, order=PANEL_ORDER):
    """Composite Gauss-Legendre nodes and weights on [lo, hi].

    Infinite edges are clipped to +-EDGE_CLIP.
    """
    lo = max(float(lo), -EDGE_CLIP)
    hi = min(float(hi), EDGE_CLIP)
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    panels = max(1, int(np.ceil((hi - lo) / panel_width)))
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = _legendre_rule(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).reshape(-1)
    w = (half[:, None] * weights[None, :]).reshape(-1)
    return x, w


def interval_overlaps(lo, hi, cutoff):
    """Matrix of integrals int_lo^hi psi_m(x) psi_n(x) dx at theta = 0, m, n <= cutoff."""
    x, w = panel_rule(lo, hi)
    psi = hermite_functions(cutoff, x)
    return (psi * w) @ psi.T


def _check_threshold(T):
    if not T >= 0:
        raise ValueError(f'threshold T must be non-negative, got {T}')


def window_overlap_matrix(T, cutoff, parity_zeroing=True):
    """W[m, n] = int_{-T}^{T} psi_m psi_n dx at theta = 0.

    Computed as twice the half-window integral on [0, T]; entries with odd
    m + n are set to exactly zero (odd integrand). With parity_zeroing=False
    the doubling is applied to every entry, which is wrong for odd m + n and
    exists only to exercise the fair-sampling verification.
    """
    _check_threshold(T)
    if T == 0:
        return np.zeros((cutoff + 1, cutoff + 1))
    half = interval_overlaps(0.0, T, cutoff)
    window = 2.0 * half
    if parity_zeroing:
        m, n = np.indices(window.shape)
        window[(m + n) % 2 == 1] = 0.0
    return window


def window_overlap(m, n, T):
    """int_{-T}^{T} <m|x><x|n> dx at theta = 0; exactly 0 for odd m + n."""
    _check_photon_number(m)
    _check_photon_number(n)
    _check_threshold(T)
    if (m + n) % 2:
        return 0.0
    return float(window_overlap_matrix(T, max(m, n))[m, n])


def phase_matrix(cutoff, theta):
    """e^{i (n - m) theta} for the (m, n) entry"""
    k = np.arange(cutoff + 1)
    return np.exp(1j * (k[None, :] - k[:, None]) * theta)


def build_postselection_operators(T, cutoff, theta=0.0, parity_zeroing=True):
    """Discard / accept operators of threshold binning on one mode.

    Returns:
        (q_discard, q_accept): Q_empty[m, n] = e^{i(n-m)theta} W[m, n] and
        Q_check = I - Q_empty, both TruncatedOperator on one mode.
    """
    if cutoff < 1:
        raise ValueError(f'cutoff must be at least 1, got {cutoff}')
    window = window_overlap_matrix(T, cutoff, parity_zeroing) * phase_matrix(cutoff, theta)
    q_discard = TruncatedOperator(cutoff, 1, window)
    q_accept = TruncatedOperator(cutoff, 1, np.eye(cutoff + 1) - window)
    for name, op in (('Q_discard', q_discard), ('Q_accept', q_accept)):
        eig = op.eigenvalues()
        if eig[0] < -PSD_TOL or eig[-1] > 1 + PSD_TOL:
            raise NumericalError(f'{name} at T={T}, cutoff={cutoff} has eigenvalues '
                                 f'outside [0, 1]: [{eig[0]:.3e}, {eig[-1]:.3e}]')
    return q_discard, q_accept


def psd_operator_sqrt(operator):
    """Hermitian PSD square root B with B @ B = A."""
    if not operator.is_hermitian(PSD_TOL):
        raise ValueError('operator is not Hermitian within 1e-10')
    return TruncatedOperator(operator.cutoff, operator.modes, psd_matrix_sqrt(operator.entries))


def psd_matrix_sqrt(matrix):
    """Square root of a Hermitian PSD matrix of any dimension"""
    hermitian = 0.5 * (matrix + matrix.conj().T)
    eig, vec = np.linalg.eigh(hermitian)
    if eig[0] < -SQRT_EIGEN_TOL:
        raise NumericalError(f'operator has negative eigenvalue {eig[0]:.3e}')
    root = (vec * np.sqrt(np.clip(eig, 0.0, None))) @ vec.conj().T
    return 0.5 * (root + root.conj().T)
