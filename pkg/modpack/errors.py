"""Exceptions raised by the numerical modules and the experiment stages.

Exit codes used by the controller:
    ConfigError     -> 2
    AcceptanceError -> 3
    NumericalError  -> 4
"""


class PathEntError(Exception):
    """Base class of every error raised on purpose by this package"""


class NumericalError(PathEntError):
    """Quadrature failure, non-PSD operator or sampler envelope failure"""


class ConvergenceError(NumericalError):
    """Iterative reconstruction did not converge"""

    def __init__(self, message, last_values=()):
        super().__init__(message)
        self.last_values = list(last_values)

    def __str__(self):
        trace = ', '.join(f'{v:.10g}' for v in self.last_values)
        return f'{self.args[0]} (last log-likelihood values: {trace})'


class EmptySurvivorError(PathEntError):
    """No coincidence survived the threshold binning"""


class DegenerateDataError(PathEntError):
    """Corrected data carries no usable single-photon mass"""


class AcceptanceError(PathEntError):
    """A verification residual exceeded its tolerance"""


class ConfigError(PathEntError, ValueError):
    """Invalid experiment configuration"""

    def __init__(self, message, section=None, key=None, line=None):
        super().__init__(message)
        self.section = section
        self.key = key
        self.line = line

    def __str__(self):
        where = []
        if self.line is not None:
            where.append(f'line {self.line}')
        if self.section is not None:
            where.append(f'[{self.section}]' + (f' {self.key}' if self.key else ''))
        prefix = f'{", ".join(where)}: ' if where else ''
        return f'{prefix}{self.args[0]}'
