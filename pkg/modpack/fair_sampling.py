"""Numerical check that threshold post-selection factorizes into a classical
setting filter and a setting-independent quantum filter.

A measurement setting a is identified with its LO phase theta_a; the
register H_A is a diagonal bookkeeping space with one basis state per
setting. The filter acts as
    F(xi) = |ok><ok| (x) sqrt(M_ok) xi sqrt(M_ok) + |none><none| (x) sqrt(M_none) xi sqrt(M_none)
with M = sum_a |a><a| (x) Q(theta_a).
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalError
from .fock_core import TruncatedOperator, build_postselection_operators, psd_matrix_sqrt

logger = logging.getLogger(__name__)

TRACE_TOL = 1e-12
FACTORIZATION_TOL = 1e-10
THETA_INDEPENDENCE_TOL = 1e-12
DEFAULT_THRESHOLDS = (0.2, 0.82, 1.0, 2.0)
DEFAULT_THETA_GRID = tuple(2 * np.pi * k / 8 for k in range(8))


@dataclass(frozen=True)
class SettingsRegister:
    """Finite list of settings, each given by its LO phase"""
    thetas: tuple

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        if not thetas:
            raise ValueError('at least one setting is required')
        if len(set(thetas)) != len(thetas):
            raise ValueError(f'settings must be distinct, got {thetas}')
        object.__setattr__(self, 'thetas', thetas)

    def __len__(self):
        return len(self.thetas)

    def index(self, a):
        if not isinstance(a, (int, np.integer)) or not 0 <= a < len(self.thetas):
            raise ValueError(f'unknown setting {a!r}; register holds {len(self.thetas)} settings')
        return int(a)

    def projector(self, a):
        p = np.zeros((len(self), len(self)))
        p[self.index(a), self.index(a)] = 1.0
        return p


@dataclass(frozen=True, eq=False)
class FlaggedState:
    """Block-diagonal flagged output: accepted (ok flag) and discarded (empty flag) blocks."""
    accepted: np.ndarray
    discarded: np.ndarray

    def __post_init__(self):
        if np.shape(self.accepted) != np.shape(self.discarded):
            raise ValueError('flag blocks must have the same dimension')

    @property
    def masses(self):
        return float(np.trace(self.accepted).real), float(np.trace(self.discarded).real)

    def total_trace(self):
        return sum(self.masses)

    def max_abs_difference(self, other):
        return max(float(np.max(np.abs(self.accepted - other.accepted))),
                   float(np.max(np.abs(self.discarded - other.discarded))))


@dataclass(frozen=True)
class FactorizationResidual:
    residual: float
    theta_residual: float
    note: str = ''

    @property
    def value(self):
        return max(self.residual, self.theta_residual)

    def passed(self, tol=FACTORIZATION_TOL, theta_tol=THETA_INDEPENDENCE_TOL):
        return self.residual <= tol and self.theta_residual <= theta_tol


@lru_cache(maxsize=1024)
def _postselection(T, cutoff, theta, parity_zeroing):
    q_discard, q_accept = build_postselection_operators(T, cutoff, theta, parity_zeroing)
    return q_discard.entries, q_accept.entries


def _embed(rho, cutoff):
    """rho padded with zeros to the space cut at `cutoff`"""
    if rho.modes != 1:
        raise ValueError('the filter acts on a single mode')
    if rho.cutoff > cutoff:
        raise ValueError(f'rho cutoff {rho.cutoff} exceeds filter cutoff {cutoff}')
    entries = np.zeros((cutoff + 1, cutoff + 1), dtype=np.complex128)
    entries[:rho.cutoff + 1, :rho.cutoff + 1] = rho.entries
    return entries


def _check_cutoff(cutoff):
    if cutoff < 1:
        raise ValueError(f'cutoff must be at least 1, got {cutoff}')


def apply_filter(a, rho, T, cutoff, register, parity_zeroing=True):
    """F(|a><a| (x) rho) on H_A (x) H"""
    _check_cutoff(cutoff)
    blocks_discard = []
    blocks_accept = []
    for theta in register.thetas:
        q_discard, q_accept = _postselection(float(T), cutoff, theta, parity_zeroing)
        blocks_discard.append(q_discard)
        blocks_accept.append(q_accept)
    m_discard = _block_diagonal(blocks_discard)
    m_accept = _block_diagonal(blocks_accept)
    xi = np.kron(register.projector(a), _embed(rho, cutoff))
    root_accept = psd_matrix_sqrt(m_accept)
    root_discard = psd_matrix_sqrt(m_discard)
    return FlaggedState(root_accept @ xi @ root_accept, root_discard @ xi @ root_discard)


def _block_diagonal(blocks):
    size = blocks[0].shape[0]
    result = np.zeros((len(blocks) * size,) * 2, dtype=np.complex128)
    for i, block in enumerate(blocks):
        result[i * size:(i + 1) * size, i * size:(i + 1) * size] = block
    return result


def classical_filter(a, register):
    """Setting filter; always flags ok"""
    p = register.projector(a)
    return FlaggedState(p, np.zeros_like(p))


def quantum_filter(rho, T, cutoff, theta=0.0, parity_zeroing=True):
    """Threshold filter on H alone, built at LO phase theta"""
    _check_cutoff(cutoff)
    q_discard, q_accept = _postselection(float(T), cutoff, float(theta), parity_zeroing)
    entries = _embed(rho, cutoff)
    root_accept = psd_matrix_sqrt(q_accept)
    root_discard = psd_matrix_sqrt(q_discard)
    return FlaggedState(root_accept @ entries @ root_accept, root_discard @ entries @ root_discard)


def combine_flags(classical, quantum):
    """Logical AND on the flags of F_C (x) F_Q: ok only if both are ok"""
    accepted = np.kron(classical.accepted, quantum.accepted)
    discarded = (np.kron(classical.accepted, quantum.discarded)
                 + np.kron(classical.discarded, quantum.accepted)
                 + np.kron(classical.discarded, quantum.discarded))
    return FlaggedState(accepted, discarded)


def verify_factorization(a, rho, T, theta_grid, cutoff=1, parity_zeroing=True):
    """Residual of F(|a><a| (x) rho) against AND[F_C(|a><a|) (x) F_Q(rho)].

    Args:
        a: setting index into theta_grid, or None for every setting
        parity_zeroing: False injects the odd-overlap fault

    Returns:
        FactorizationResidual; an operator that fails to be PSD yields an
        infinite residual
    """
    register = SettingsRegister(theta_grid)
    settings = range(len(register)) if a is None else [register.index(a)]
    try:
        reference_discard, _ = _postselection(float(T), cutoff, register.thetas[0], parity_zeroing)
        theta_residual = 0.0
        for theta in register.thetas[1:]:
            q_discard, _ = _postselection(float(T), cutoff, theta, parity_zeroing)
            theta_residual = max(theta_residual, float(np.max(np.abs(q_discard - reference_discard))))
        quantum = quantum_filter(rho, T, cutoff, register.thetas[0], parity_zeroing)
        residual = 0.0
        for setting in settings:
            joint = apply_filter(setting, rho, T, cutoff, register, parity_zeroing)
            product = combine_flags(classical_filter(setting, register), quantum)
            residual = max(residual, joint.max_abs_difference(product))
    except NumericalError as e:
        logger.warning('filter construction failed at T=%.4g: %s', T, e)
        return FactorizationResidual(np.inf, np.inf, str(e))
    return FactorizationResidual(residual, theta_residual)


def random_density_matrix(rng, support=2, cutoff=None):
    """A A^dagger / Tr with complex Gaussian A on the lowest `support` Fock states"""
    cutoff = support - 1 if cutoff is None else cutoff
    if not 1 <= support <= cutoff + 1:
        raise ValueError(f'support {support} does not fit cutoff {cutoff}')
    a = rng.standard_normal((support, support)) + 1j * rng.standard_normal((support, support))
    rho = a @ a.conj().T
    entries = np.zeros((cutoff + 1, cutoff + 1), dtype=np.complex128)
    entries[:support, :support] = rho / np.trace(rho).real
    return TruncatedOperator(cutoff, 1, entries)
