from .errors import PathEntError, NumericalError, ConvergenceError, EmptySurvivorError, DegenerateDataError, \
    AcceptanceError, ConfigError
from .fock_core import QuadratureWavefunction, TruncatedOperator
from .states_channels import NoiseModel, PhaseRandomizedSource, TwoModeFockState
from .homodyne_sim import MeasurementSettings, SampleBatch, SampleRecord
from .decoy_estimator import BoundedEstimate, DecoyIntensitySet, GainVector
from .chsh import ChshResult, CoincidenceCounts, CorrelationBound, ThresholdBinning
from .tomography import BinnedHistogram, BinPovm, MleConfig, TomographyResult
from .fair_sampling import FactorizationResidual, FlaggedState, SettingsRegister
