from .driver_interface import DriverInterface
from .utils import load_drivers, derive_seed, config_hash, scaled_count
from .txt_function import TxtFunction
from .config import ExperimentConfig, load_config, parse_config
from .measurement import Measurement
