import abc
import logging

import numpy as np
from PyQt5.QtCore import QRunnable, QThreadPool

from modpack.homodyne_sim import CHUNK_SIZE, MeasurementSettings, SampleBatch, chunk_bounds, chunk_generator
from modpack.states_channels import NoiseModel

logger = logging.getLogger(__name__)


class _ChunkRunnable(QRunnable):
    """Fills one chunk of the preallocated outcome arrays"""

    def __init__(self, driver, index, start, stop, seed, x_a, x_b, errors):
        super().__init__()
        self.setAutoDelete(True)
        self.driver = driver
        self.index = index
        self.start = start
        self.stop = stop
        self.seed = seed
        self.x_a = x_a
        self.x_b = x_b
        self.errors = errors

    def run(self):
        try:
            rng = chunk_generator(self.seed, self.index)
            a, b = self.driver.performGetValue('Quadratures', self.stop - self.start, rng)
            self.x_a[self.start:self.stop] = a
            self.x_b[self.start:self.stop] = b
        except Exception as e:  # re-raised on the calling thread
            self.errors[self.index] = e


class DriverInterface(abc.ABC):
    """Detection pipeline: a source, two homodyne detectors and their noise."""
    PIPELINE = ''
    METHOD = ['Intensity', 'Settings', 'Intensity label', 'Quadratures']

    def __init__(self):
        self.noise = NoiseModel()
        self.mu = 0.0
        self.settings = MeasurementSettings(0.0, 0.0)
        self.intensity_label = 0
        self.photon_number = None

    @abc.abstractmethod
    def performOpen(self, noise):
        """Prepare the pipeline for the given detector noise"""
        return NotImplemented

    @abc.abstractmethod
    def performClose(self):
        return NotImplemented

    @abc.abstractmethod
    def performSetValue(self, option, value):
        """Set one of METHOD"""
        return NotImplemented

    @abc.abstractmethod
    def performGetValue(self, option, size=1, rng=None):
        """Read one of METHOD; 'Quadratures' draws `size` outcome pairs from `rng`"""
        return NotImplemented

    def __str__(self):
        return f'{self.driver_name} ({self.driver_kind})'

    def setProperty(self, driver_name, driver_kind):
        self.driver_name = driver_name
        self.driver_kind = driver_kind

    def acquireBatch(self, count, seed, workers=1, chunk_size=CHUNK_SIZE):
        """SampleBatch of `count` records at the current set values.

        Chunk c always draws from chunk_generator(seed, c) and writes into its
        own slice, so the batch does not depend on `workers`.
        """
        if count < 1:
            raise ValueError(f'count must be at least 1, got {count}')
        x_a = np.empty(count)
        x_b = np.empty(count)
        bounds = chunk_bounds(count, chunk_size)
        errors = {}
        if workers <= 1 or len(bounds) == 1:
            for index, (start, stop) in enumerate(bounds):
                _ChunkRunnable(self, index, start, stop, seed, x_a, x_b, errors).run()
        else:
            pool = QThreadPool()
            pool.setMaxThreadCount(workers)
            for index, (start, stop) in enumerate(bounds):
                pool.start(_ChunkRunnable(self, index, start, stop, seed, x_a, x_b, errors))
            pool.waitForDone()
        if errors:
            raise errors[min(errors)]
        logger.debug('%s: %d records in %d chunks (mu=%.4g, seed=%d)',
                     self.PIPELINE, count, len(bounds), self.mu, seed)
        return SampleBatch(x_a, x_b, self.intensity_label, self.settings, seed, self.PIPELINE,
                           self.mu, self.noise, self.photon_number)
