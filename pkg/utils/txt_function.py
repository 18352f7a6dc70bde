# -*- coding: utf-8 -*-
import json
import logging
import os

import numpy as np
import pandas as pd
from PyQt5.QtCore import QObject

from modpack.fock_core import TruncatedOperator
from modpack.homodyne_sim import MeasurementSettings, SampleBatch
from modpack.states_channels import NoiseModel

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
BATCH_COLUMNS = ['x_a', 'x_b', 'intensity_label', 'setting_a', 'setting_b']
CHSH_HEADER = ['T', 's_est', 's_lower', 's_upper']
CORRELATION_HEADER = ['dtheta', 'e_est', 'e_lower', 'e_upper']


def _format(value):
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


class TxtFunction(QObject):
    """ Write and read every file of a run """

    def __init__(self, folder='data/output') -> None:
        super().__init__()
        self.setFolder(folder)

    def setFolder(self, folder):
        self.folder = folder
        self.written = []

    def path(self, name):
        return os.path.join(self.folder, name)

    def _register(self, name):
        path = self.path(name)
        if name not in self.written:
            self.written.append(name)
        logger.debug('wrote %s', path)
        return path

    def _prepare(self, name):
        path = self.path(name)
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        return path

    # =============================================================================
    # SampleBatch
    # =============================================================================

    def batchWriter(self, batch, name):
        """<name>.csv with one record per row, plus the <name>.meta.json sidecar"""
        path = self._prepare(f'{name}.csv')
        frame = pd.DataFrame({'x_a': batch.x_a, 'x_b': batch.x_b})
        frame['intensity_label'] = batch.intensity_label
        frame['setting_a'] = batch.settings.label_a
        frame['setting_b'] = batch.settings.label_b
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        meta = {
            'count': len(batch),
            'seed': batch.seed,
            'pipeline': batch.pipeline,
            'mu': batch.mu,
            'photon_number': batch.photon_number,
            'intensity_label': batch.intensity_label,
            'phi_a': batch.settings.phi_a,
            'phi_b': batch.settings.phi_b,
            'setting_a': batch.settings.label_a,
            'setting_b': batch.settings.label_b,
            'eta_pd': batch.noise.eta_pd,
            'v_e': batch.noise.v_e,
        }
        with open(self._prepare(f'{name}.meta.json'), 'w', encoding='utf-8') as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write('\n')
        self._register(f'{name}.meta.json')
        return self._register(f'{name}.csv')

    def batchReader(self, path):
        """SampleBatch from a CSV written by batchWriter and its sidecar"""
        meta_path = f'{os.path.splitext(path)[0]}.meta.json'
        with open(meta_path, encoding='utf-8') as f:
            meta = json.load(f)
        frame = pd.read_csv(path, float_precision='round_trip')
        missing = [c for c in BATCH_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f'{path}: missing columns {missing}')
        if len(frame) != meta['count']:
            raise ValueError(f'{path}: {len(frame)} records, sidecar announces {meta["count"]}')
        settings = MeasurementSettings(meta['phi_a'], meta['phi_b'], meta['setting_a'], meta['setting_b'])
        return SampleBatch(frame['x_a'].to_numpy(), frame['x_b'].to_numpy(), meta['intensity_label'],
                           settings, meta['seed'], meta['pipeline'], meta['mu'],
                           NoiseModel(meta['eta_pd'], meta['v_e']), meta['photon_number'])

    def batchFolderReader(self, folder):
        """Every batch in `folder`, in file name order"""
        names = sorted(n for n in os.listdir(folder) if n.endswith('.csv'))
        if not names:
            raise FileNotFoundError(f'no batch files in {folder}')
        return [self.batchReader(os.path.join(folder, n)) for n in names]

    # =============================================================================
    # Result tables
    # =============================================================================

    def frameWriter(self, frame, name):
        frame.to_csv(self._prepare(name), index=False, float_format=FLOAT_FORMAT)
        return self._register(name)

    def chshWriter(self, results, name='chsh_scan.csv', status_name='chsh_scan_status.csv'):
        """T,s_est,s_lower,s_upper; invalid thresholds leave the S fields empty
        and carry their reason in the row-aligned status table"""
        frame = pd.DataFrame([[r.T, r.s_est, r.s_lower, r.s_upper] for r in results],
                             columns=CHSH_HEADER, dtype=float)
        path = self.frameWriter(frame, name)
        self.statusWriter('T', [r.T for r in results], ['' if r.valid else r.reason or 'invalid' for r in results],
                          status_name)
        return path

    def correlationWriter(self, dtheta, bounds, reasons=None, name='correlation_scan.csv',
                          status_name='correlation_scan_status.csv'):
        """dtheta,e_est,e_lower,e_upper; a None bound leaves its E fields empty"""
        rows = [[d, None, None, None] if b is None else [d, b.e_est, b.e_lower, b.e_upper]
                for d, b in zip(dtheta, bounds)]
        frame = pd.DataFrame(rows, columns=CORRELATION_HEADER, dtype=float)
        path = self.frameWriter(frame, name)
        if reasons is None:
            reasons = ['' if b is not None else 'no estimate' for b in bounds]
        self.statusWriter('dtheta', dtheta, reasons, status_name)
        return path

    def statusWriter(self, key, values, reasons, name):
        """<key>,valid,reason; an empty reason marks a valid row"""
        frame = pd.DataFrame({key: np.asarray(values, dtype=float),
                              'valid': [not reason for reason in reasons],
                              'reason': list(reasons)})
        return self.frameWriter(frame, name)

    # =============================================================================
    # Density matrix, summaries and reports
    # =============================================================================

    def densityWriter(self, rho, name='density_matrix.txt'):
        """'dimension <d>' then d rows of comma separated re,im pairs"""
        with open(self._prepare(name), 'w', encoding='utf-8') as f:
            f.write(f'dimension {rho.dim}\n')
            for row in rho.entries:
                f.write(','.join(f'{FLOAT_FORMAT % z.real},{FLOAT_FORMAT % z.imag}' for z in row) + '\n')
        return self._register(name)

    def densityReader(self, path):
        with open(path, encoding='utf-8') as f:
            header = f.readline().split()
            if len(header) != 2 or header[0] != 'dimension':
                raise ValueError(f'{path}: missing dimension header')
            dim = int(header[1])
            values = np.loadtxt(f, delimiter=',', ndmin=2)
        if values.shape != (dim, 2 * dim):
            raise ValueError(f'{path}: expected {dim} rows of {dim} re,im pairs')
        cutoff = int(round(np.sqrt(dim))) - 1
        return TruncatedOperator(cutoff, 2, values[:, 0::2] + 1j * values[:, 1::2])

    def summaryWriter(self, summary, name):
        """key = value lines, in insertion order"""
        with open(self._prepare(name), 'w', encoding='utf-8') as f:
            for key, value in summary.items():
                if isinstance(value, (list, tuple, np.ndarray)):
                    value = ','.join(_format(v) for v in value)
                f.write(f'{key} = {_format(value)}\n')
        return self._register(name)

    def summaryReader(self, path):
        summary = {}
        with open(path, encoding='utf-8') as f:
            for line in f:
                if '=' in line:
                    key, value = line.split('=', 1)
                    summary[key.strip()] = value.strip()
        return summary

    def reportWriter(self, lines, name):
        with open(self._prepare(name), 'w', encoding='utf-8') as f:
            f.write('\n'.join(lines) + '\n')
        return self._register(name)

    def manifestWriter(self, manifest, name='manifest.json'):
        with open(self._prepare(name), 'w', encoding='utf-8') as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write('\n')
        return self._register(name)
