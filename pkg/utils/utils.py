# model load_driver
import hashlib
import importlib
import logging
import pkgutil

import numpy as np

import drivers
from utils.driver_interface import DriverInterface

logger = logging.getLogger(__name__)


def load_drivers():
    """
    Import every module under the folder 'drivers' and map its pipeline tag to its Driver class.
    >>> sorted(load_drivers())
    ['equivalent', 'ideal-fock', 'physical']
    """
    driver_dict = {}
    for _, name, _ in pkgutil.iter_modules(drivers.__path__):
        try:
            module = importlib.import_module(f'drivers.{name}')
        except ImportError as e:
            logger.warning('cannot import driver %s: %s', name, e)
            continue
        driver = getattr(module, 'Driver', None)
        if driver is None or not issubclass(driver, DriverInterface):
            logger.warning('drivers.%s has no Driver(DriverInterface) class', name)
            continue
        driver_dict[driver.PIPELINE] = driver
    return driver_dict


def derive_seed(master_seed, *key):
    """64-bit seed of the stream identified by `key` under `master_seed`"""
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(sequence.generate_state(1, np.uint64)[0])


def config_hash(text):
    """sha256 of the canonical config text"""
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def scaled_count(count, scale):
    """Sample count divided by the desk-run scale, at least 1"""
    return max(1, int(count) // int(scale))
