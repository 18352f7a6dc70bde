import numpy as np
import pytest

from modpack.homodyne_sim import MeasurementSettings, sample_batch
from modpack.states_channels import NoiseModel
from utils.utils import load_drivers


@pytest.fixture
def driver_dict():
    return load_drivers()


def _open(driver_dict, pipeline, noise=None):
    driver = driver_dict[pipeline]()
    driver.setProperty(pipeline, 'pipeline')
    driver.performOpen(noise or NoiseModel())
    return driver


def test_every_pipeline_has_a_driver(driver_dict):
    assert {'physical', 'equivalent', 'ideal-fock'} <= set(driver_dict)
    assert str(_open(driver_dict, 'ideal-fock')) == 'ideal-fock (pipeline)'


@pytest.mark.parametrize('pipeline', ['physical', 'equivalent'])
def test_driver_matches_sampler(driver_dict, pipeline):
    noise = NoiseModel.from_eta_ele(0.617, 0.6)
    settings = MeasurementSettings.chsh(0, 1)
    driver = _open(driver_dict, pipeline, noise)
    driver.performSetValue('Intensity', 0.5)
    driver.performSetValue('Settings', settings)
    driver.performSetValue('Intensity label', 3)
    batch = driver.acquireBatch(2500, seed=17, chunk_size=1000)
    reference = sample_batch(0.5, settings, 2500, noise, pipeline, seed=17, intensity_label=3, chunk_size=1000)
    assert np.array_equal(batch.x_a, reference.x_a) and np.array_equal(batch.x_b, reference.x_b)
    assert batch.intensity_label == 3 and batch.pipeline == pipeline


def test_workers_do_not_change_the_batch(driver_dict):
    driver = _open(driver_dict, 'equivalent')
    driver.performSetValue('Intensity', 0.984)
    serial = driver.acquireBatch(10_000, seed=5, workers=1, chunk_size=1000)
    parallel = driver.acquireBatch(10_000, seed=5, workers=4, chunk_size=1000)
    assert np.array_equal(serial.x_a, parallel.x_a) and np.array_equal(serial.x_b, parallel.x_b)


def test_ideal_fock_driver(driver_dict):
    driver = _open(driver_dict, 'ideal-fock')
    assert driver.performGetValue('Photon number') == 1
    driver.performSetValue('Intensity', 3.0)
    driver.performSetValue('Photon number', 2)
    batch = driver.acquireBatch(100, seed=1)
    assert batch.photon_number == 2 and batch.mu == 0.0
    with pytest.raises(ValueError):
        driver.performSetValue('Photon number', 17)


def test_read_options(driver_dict):
    noise = NoiseModel.from_eta_ele(0.617, 0.6)
    physical = _open(driver_dict, 'physical', noise)
    assert physical.performGetValue('Photodiode efficiency') == 0.617
    assert physical.performGetValue('Electronic noise') == pytest.approx(2 / 3)
    equivalent = _open(driver_dict, 'equivalent', noise)
    assert equivalent.performGetValue('Total transmittance') == pytest.approx(0.617 * 0.6)
    assert str(equivalent) == 'equivalent'


def test_invalid_options(driver_dict):
    driver = _open(driver_dict, 'physical')
    with pytest.raises(ValueError):
        driver.performSetValue('Temperature', 1.0)
    with pytest.raises(ValueError):
        driver.performGetValue('Temperature')
    with pytest.raises(ValueError):
        driver.performSetValue('Intensity', -1.0)
    with pytest.raises(ValueError):
        driver.acquireBatch(0, seed=1)
