import json

import numpy as np
import pandas as pd
import pytest

from modpack.chsh import ChshResult, CorrelationBound
from modpack.fock_core import TruncatedOperator
from modpack.homodyne_sim import MeasurementSettings, sample_batch
from modpack.states_channels import NoiseModel
from utils.txt_function import TxtFunction


@pytest.fixture
def database(tmp_path):
    return TxtFunction(str(tmp_path))


def test_batch_files_restore_the_batch(database):
    noise = NoiseModel.from_eta_ele(0.617, 0.6)
    batch = sample_batch(0.2314, MeasurementSettings.chsh(1, 0), 257, noise, 'physical', seed=9, intensity_label=2)
    path = database.batchWriter(batch, 'batches/a1_b0_i2')
    assert database.written == ['batches/a1_b0_i2.meta.json', 'batches/a1_b0_i2.csv']
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['x_a', 'x_b', 'intensity_label', 'setting_a', 'setting_b']
    assert set(frame['intensity_label']) == {2} and set(frame['setting_a']) == {1}

    restored = database.batchReader(path)
    assert np.array_equal(restored.x_a, batch.x_a) and np.array_equal(restored.x_b, batch.x_b)
    assert restored.settings == batch.settings
    assert restored.noise == batch.noise
    assert (restored.seed, restored.pipeline, restored.mu) == (9, 'physical', 0.2314)


def test_batch_reader_checks_sidecar(database, tmp_path):
    batch = sample_batch(0.0, MeasurementSettings(0.0, 0.0), 10, NoiseModel(), 'equivalent', seed=1)
    path = database.batchWriter(batch, 'b')
    meta_path = tmp_path / 'b.meta.json'
    meta = json.loads(meta_path.read_text(encoding='utf-8'))
    meta['count'] = 11
    meta_path.write_text(json.dumps(meta), encoding='utf-8')
    with pytest.raises(ValueError):
        database.batchReader(path)
    (tmp_path / 'empty').mkdir()
    with pytest.raises(FileNotFoundError):
        database.batchFolderReader(str(tmp_path / 'empty'))


def test_chsh_table_leaves_invalid_rows_empty(database, tmp_path):
    results = [ChshResult(0.0, 1.8, 1.79, 1.81), ChshResult.invalid(9.0, 'no survivors, T too large')]
    database.chshWriter(results)
    lines = (tmp_path / 'chsh_scan.csv').read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'T,s_est,s_lower,s_upper'
    assert lines[1].startswith('0,1.8,1.79,')
    assert lines[2] == '9,,,'
    status = pd.read_csv(tmp_path / 'chsh_scan_status.csv', keep_default_na=False)
    assert list(status.columns) == ['T', 'valid', 'reason']
    assert status['T'].tolist() == [0.0, 9.0]
    assert status['valid'].tolist() == [True, False]
    assert status['reason'].tolist() == ['', 'no survivors, T too large']
    assert database.written == ['chsh_scan.csv', 'chsh_scan_status.csv']


def test_correlation_table(database, tmp_path):
    database.correlationWriter([0.0, np.pi, 2.0], [CorrelationBound(0.5, 0.4, 0.6),
                                                   CorrelationBound(-0.5, -0.6, -0.4), None],
                               ['', '', 'all coincidences discarded'])
    frame = pd.read_csv(tmp_path / 'correlation_scan.csv')
    assert list(frame.columns) == ['dtheta', 'e_est', 'e_lower', 'e_upper']
    assert frame['e_lower'].tolist()[:2] == [0.4, -0.6]
    assert frame.iloc[2, 1:].isna().all()
    status = pd.read_csv(tmp_path / 'correlation_scan_status.csv', keep_default_na=False)
    assert status['valid'].tolist() == [True, True, False]
    assert status['reason'].iloc[2] == 'all coincidences discarded'


def test_density_matrix_file(database, tmp_path):
    rng = np.random.default_rng(3)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = TruncatedOperator(1, 2, a @ a.conj().T)
    path = database.densityWriter(rho)
    assert (tmp_path / 'density_matrix.txt').read_text(encoding='utf-8').startswith('dimension 4\n')
    restored = database.densityReader(path)
    assert np.array_equal(restored.entries, rho.entries)
    (tmp_path / 'broken.txt').write_text('4\n1,0\n', encoding='utf-8')
    with pytest.raises(ValueError):
        database.densityReader(str(tmp_path / 'broken.txt'))


def test_summary_and_manifest(database, tmp_path):
    database.summaryWriter({'fidelity': 0.987, 'converged': True, 'photon_number_a': np.array([0.5, 0.5])},
                           'tomography_summary.txt')
    summary = database.summaryReader(str(tmp_path / 'tomography_summary.txt'))
    assert float(summary['fidelity']) == 0.987
    assert summary['converged'] == 'True' and summary['photon_number_a'] == '0.5,0.5'
    database.manifestWriter({'stage': 'tomography'})
    assert json.loads((tmp_path / 'manifest.json').read_text(encoding='utf-8')) == {'stage': 'tomography'}
    assert database.written == ['tomography_summary.txt', 'manifest.json']
