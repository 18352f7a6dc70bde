"""Experiment configuration: flat INI text with section headers.

Every key has a default (the reported operating point), so an empty file is
a valid configuration. List values are comma separated; numbers may be
written as multiples of pi, e.g. ``-3pi/4``.
"""
import configparser
import logging
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from modpack.decoy_estimator import DEFAULT_INTENSITIES, DecoyIntensitySet
from modpack.errors import ConfigError
from modpack.fock_core import MAX_PHOTON_NUMBER
from modpack.homodyne_sim import A_PHASES, B_PHASES, PIPELINES
from modpack.states_channels import NoiseModel
from modpack.tomography import DEFAULT_DTHETA_GRID, MleConfig
from modpack.fair_sampling import DEFAULT_THETA_GRID, FACTORIZATION_TOL, DEFAULT_THRESHOLDS

logger = logging.getLogger(__name__)

_PI_TERM = re.compile(r'^([+-]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/(\d+(?:\.\d+)?))?$')


def parse_number(text):
    """float, or a multiple of pi such as 'pi/4', '-pi', '3*pi/4'"""
    text = text.strip().replace(' ', '')
    match = _PI_TERM.match(text)
    if match:
        factor, divisor = match.groups()
        if factor in ('', '+'):
            factor = 1.0
        elif factor == '-':
            factor = -1.0
        else:
            factor = float(factor)
        return factor * np.pi / (float(divisor) if divisor else 1.0)
    return float(text)


def _grid(start, stop, step):
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(np.round(start + step * k, 10)) for k in range(count))


@dataclass(frozen=True)
class ExperimentConfig:
    # [source]
    intensities: tuple = DEFAULT_INTENSITIES
    vacuum_count: int = 50_000_000
    decoy_count: int = 1_000_000
    # [noise]
    eta_pd: float = 1.0
    v_e: float = 0.0
    # [simulation]
    pipeline: str = 'equivalent'
    photon_number: int = 1
    seed: int = 20240417
    chunk_size: int = 2 ** 16
    # [chsh]
    threshold: float = 1.0
    t_start: float = 0.0
    t_stop: float = 2.0
    t_step: float = 0.02
    dtheta_grid: tuple = DEFAULT_DTHETA_GRID
    phases_a: tuple = A_PHASES
    phases_b: tuple = B_PHASES
    # [tomography]
    cutoff: int = 10
    max_iterations: int = 2000
    tolerance: float = 1e-9
    bin_width: float = 0.2
    x_range: float = 5.0
    tomography_dtheta_grid: tuple = DEFAULT_DTHETA_GRID
    target: str = 'bell'
    # [fair_sampling]
    fs_thresholds: tuple = DEFAULT_THRESHOLDS
    fs_theta_grid: tuple = DEFAULT_THETA_GRID
    fs_states: int = 100
    fs_cutoff: int = 1
    fs_tolerance: float = FACTORIZATION_TOL
    fs_seed: int = 20240417
    inject_fault: bool = False
    # command line only
    scale: int = 1
    workers: int = 1
    out: str = 'data/output'
    source_text: str = field(default='', compare=False, repr=False)

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ConfigError(f'unknown pipeline {self.pipeline!r}; expected one of {PIPELINES}',
                              'simulation', 'pipeline')
        for name in ('vacuum_count', 'decoy_count', 'chunk_size', 'scale', 'workers', 'fs_states'):
            if getattr(self, name) < 1:
                raise ConfigError(f'{name} must be at least 1, got {getattr(self, name)}')
        for name in ('dtheta_grid', 'phases_a', 'phases_b', 'tomography_dtheta_grid', 'fs_thresholds',
                     'fs_theta_grid', 'intensities'):
            if not getattr(self, name):
                raise ConfigError(f'{name} must not be empty')
        if len(self.phases_a) != 2 or len(self.phases_b) != 2:
            raise ConfigError('CHSH needs exactly two phases per party', 'chsh')
        if not self.t_step > 0 or self.t_stop < self.t_start or self.t_start < 0:
            raise ConfigError('threshold grid needs 0 <= t_start <= t_stop and t_step > 0', 'chsh')
        if not self.threshold >= 0:
            raise ConfigError(f'threshold must be non-negative, got {self.threshold}', 'chsh', 'threshold')
        if not 0 <= self.photon_number <= MAX_PHOTON_NUMBER:
            raise ConfigError(f'photon_number must lie in [0, {MAX_PHOTON_NUMBER}]', 'simulation', 'photon_number')
        if self.target not in ('bell', 'vacuum'):
            raise ConfigError(f'unknown tomography target {self.target!r}', 'tomography', 'target')
        try:
            self.intensity_set()
            self.noise_model()
            self.mle_config()
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def intensity_set(self):
        return DecoyIntensitySet(self.intensities)

    def noise_model(self):
        return NoiseModel(self.eta_pd, self.v_e)

    def mle_config(self):
        return MleConfig(self.cutoff, self.max_iterations, self.tolerance, self.bin_width, self.x_range)

    def t_grid(self):
        return _grid(self.t_start, self.t_stop, self.t_step)

    @property
    def uses_decoy(self):
        return self.pipeline != 'ideal-fock'

    def override(self, **values):
        """Copy with command-line overrides; None values are ignored"""
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def canonical_text(self):
        """Deterministic text of every resolved value, used for hashing"""
        lines = []
        for key, value in asdict(self).items():
            if key in ('source_text', 'out', 'workers'):
                continue
            lines.append(f'{key} = {value!r}')
        return '\n'.join(lines) + '\n'


def _tuple_of(parse):
    return lambda text: tuple(parse(t) for t in text.split(',') if t.strip())


def _boolean(text):
    value = text.strip().lower()
    if value in ('1', 'yes', 'true', 'on'):
        return True
    if value in ('0', 'no', 'false', 'off'):
        return False
    raise ValueError(f'not a boolean: {text!r}')


def _integer(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f'not an integer: {text!r}')
    return int(value)


# section -> key -> (field name, parser)
KEYS = {
    'source': {
        'intensities': ('intensities', _tuple_of(parse_number)),
        'vacuum_count': ('vacuum_count', _integer),
        'decoy_count': ('decoy_count', _integer),
    },
    'noise': {
        'eta_pd': ('eta_pd', parse_number),
        'v_e': ('v_e', parse_number),
    },
    'simulation': {
        'pipeline': ('pipeline', str.strip),
        'photon_number': ('photon_number', _integer),
        'seed': ('seed', _integer),
        'chunk_size': ('chunk_size', _integer),
    },
    'chsh': {
        'threshold': ('threshold', parse_number),
        't_start': ('t_start', parse_number),
        't_stop': ('t_stop', parse_number),
        't_step': ('t_step', parse_number),
        'dtheta_grid': ('dtheta_grid', _tuple_of(parse_number)),
        'phases_a': ('phases_a', _tuple_of(parse_number)),
        'phases_b': ('phases_b', _tuple_of(parse_number)),
    },
    'tomography': {
        'cutoff': ('cutoff', _integer),
        'max_iterations': ('max_iterations', _integer),
        'tolerance': ('tolerance', parse_number),
        'bin_width': ('bin_width', parse_number),
        'x_range': ('x_range', parse_number),
        'dtheta_grid': ('tomography_dtheta_grid', _tuple_of(parse_number)),
        'target': ('target', str.strip),
    },
    'fair_sampling': {
        'thresholds': ('fs_thresholds', _tuple_of(parse_number)),
        'theta_grid': ('fs_theta_grid', _tuple_of(parse_number)),
        'states': ('fs_states', _integer),
        'cutoff': ('fs_cutoff', _integer),
        'tolerance': ('fs_tolerance', parse_number),
        'seed': ('fs_seed', _integer),
        'inject_fault': ('inject_fault', _boolean),
    },
}


def _line_of(text, section, key=None):
    """1-based line of `key` inside `[section]` (or of the header itself)"""
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith('[') and stripped.endswith(']'):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return number
            continue
        if current == section and key is not None:
            name = re.split(r'[=:]', stripped, maxsplit=1)[0].strip().lower()
            if name == key:
                return number
    return None


def parse_config(text):
    """ExperimentConfig from INI text; unknown or invalid entries raise ConfigError."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f'malformed config: {e.message}', line=getattr(e, 'lineno', None)) from e
    values = {}
    for section in parser.sections():
        if section not in KEYS:
            raise ConfigError(f'unknown section [{section}]', section, line=_line_of(text, section))
        for key, raw in parser.items(section):
            if key not in KEYS[section]:
                raise ConfigError('unknown key', section, key, _line_of(text, section, key))
            name, parse = KEYS[section][key]
            try:
                values[name] = parse(raw)
            except ValueError as e:
                raise ConfigError(f'invalid value {raw!r} ({e})', section, key, _line_of(text, section, key)) from e
    try:
        return ExperimentConfig(**values, source_text=text)
    except ConfigError as e:
        if e.line is None and e.section is not None and e.key is not None:
            e.line = _line_of(text, e.section, e.key)
        raise


def load_config(path=None):
    """Config from a file, or the defaults when no path is given"""
    if path is None:
        logger.info('no config file given, using defaults')
        return ExperimentConfig()
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f'cannot read config {path}: {e.strerror}') from e
    logger.info('config loaded from %s', path)
    return parse_config(text)
