import logging
from collections import defaultdict
from time import perf_counter

import numpy as np
import pandas as pd
from PyQt5.QtCore import QObject, pyqtSignal

from modpack.chsh import CHSH_SETTINGS, OUTCOMES, bounded_probabilities, correlation_at, fit_visibility, \
    ideal_chsh, ideal_single_photon_correlation, scan_threshold
from modpack.decoy_estimator import bound_interval
from modpack.errors import AcceptanceError, EmptySurvivorError, NumericalError
from modpack.fair_sampling import THETA_INDEPENDENCE_TOL, random_density_matrix, verify_factorization
from modpack.homodyne_sim import MeasurementSettings
from modpack.states_channels import TwoModeFockState, compensated_intensity
from modpack.tomography import build_povm_elements, decoy_corrected_histogram, histogram_from_batches, \
    mle_reconstruct, multiphoton_mass, photon_number_distribution, tomography_settings
from utils.utils import derive_seed, load_drivers, scaled_count

logger = logging.getLogger(__name__)

# first element of every stream key
CHSH_STREAM = 1
CORRELATION_STREAM = 2
TOMOGRAPHY_STREAM = 3
COMPLETENESS_TOL = 1e-8
IDEAL_CURVE_POINTS = 65


def _ideal_curve(function, points, *args):
    """Oracle values along a grid; points without survival probability give NaN"""
    values = []
    for point in points:
        try:
            values.append(function(point, *args))
        except EmptySurvivorError:
            values.append(np.nan)
    return values


class Measurement(QObject):
    """this class is used to perform the experiment stages"""
    finished = pyqtSignal(int)
    signal_progress = pyqtSignal(int, int)
    page_information = pyqtSignal(str)

    STAGES = {
        'simulate': 'simulate',
        'correlation-scan': 'correlationScan',
        'chsh-scan': 'chshScan',
        'tomography': 'tomography',
        'decoy-estimate': 'decoyEstimate',
        'fair-sampling-check': 'fairSamplingCheck',
    }

    def __init__(self, database):
        super().__init__()
        self._database = database
        self.config = None
        self.driver = None
        self.timings = {}

    def setInfo(self, config, driver_dict=None):
        self.config = config
        driver_dict = driver_dict or load_drivers()
        if config.pipeline not in driver_dict:
            raise ValueError(f'no driver for pipeline {config.pipeline!r}')
        self.driver = driver_dict[config.pipeline]()
        self.driver.setProperty(config.pipeline, 'pipeline')
        self.driver.performOpen(config.noise_model())
        logger.info('opened driver %s', self.driver)
        if config.pipeline == 'ideal-fock':
            self.driver.performSetValue('Photon number', config.photon_number)
        self.timings = {}

    def startMeasure(self, stage, **options):
        """Run one stage; exceptions propagate to the controller"""
        start = perf_counter()
        self.page_information.emit(f'Run {stage} ({self.config.pipeline} pipeline)')
        try:
            getattr(self, self.STAGES[stage])(**options)
        finally:
            self.driver.performClose()
            self.timings[stage] = round(perf_counter() - start, 3)
        self.finished.emit(len(self._database.written))

    # =============================================================================
    # Batch acquisition
    # =============================================================================

    def intensityPlan(self):
        """[(intensity label, effective mu, count)], vacuum first; one entry for a Fock source"""
        config = self.config
        if not config.uses_decoy:
            return [(0, 0.0, scaled_count(config.decoy_count, config.scale))]
        plan = [(0, 0.0, scaled_count(config.vacuum_count, config.scale))]
        for label, mu in enumerate(config.intensities, start=1):
            plan.append((label, mu, scaled_count(config.decoy_count, config.scale)))
        return plan

    def acquire(self, settings, label, mu, count, key):
        """One SampleBatch; coherent intensities are compensated for the detector losses"""
        self.driver.performSetValue('Settings', settings)
        self.driver.performSetValue('Intensity label', label)
        if self.config.uses_decoy:
            self.driver.performSetValue('Intensity', compensated_intensity(mu, self.config.noise_model()))
        seed = derive_seed(self.config.seed, *key)
        return self.driver.acquireBatch(count, seed, self.config.workers, self.config.chunk_size)

    def iterSettingBatches(self, settings_list, stream):
        """Yield, per setting, the list of batches over the intensity plan"""
        plan = self.intensityPlan()
        total = len(settings_list) * len(plan)
        done = 0
        for index, settings in enumerate(settings_list):
            per_setting = []
            for label, mu, count in plan:
                per_setting.append(self.acquire(settings, label, mu, count, (stream, index, label)))
                done += 1
                self.signal_progress.emit(done, total)
            yield per_setting

    def settingBatches(self, settings_list, stream):
        return list(self.iterSettingBatches(settings_list, stream))

    def chshSettings(self):
        config = self.config
        return [MeasurementSettings(config.phases_a[a], config.phases_b[b], a, b) for a, b in CHSH_SETTINGS]

    def intensitySet(self):
        return self.config.intensity_set() if self.config.uses_decoy else None

    # =============================================================================
    # Stages
    # =============================================================================

    def simulate(self):
        """Persist the CHSH batches, vacuum included"""
        for per_setting in self.settingBatches(self.chshSettings(), CHSH_STREAM):
            for batch in per_setting:
                name = f'batches/a{batch.settings.label_a}_b{batch.settings.label_b}_i{batch.intensity_label}'
                self._database.batchWriter(batch, name)
        self.page_information.emit(f'{len(self._database.written) // 2} batches written')

    def correlationScan(self):
        config = self.config
        settings_list = tomography_settings(config.dtheta_grid)
        batches = self.settingBatches(settings_list, CORRELATION_STREAM)
        intensity_set = self.intensitySet()
        dtheta = [s.dtheta for s in settings_list]
        bounds = []
        reasons = []
        for d, per_setting in zip(dtheta, batches):
            try:
                bounds.append(correlation_at(per_setting, intensity_set, config.threshold))
                reasons.append('')
            except EmptySurvivorError as e:
                logger.info('dtheta=%.4g marked invalid: %s', d, e)
                bounds.append(None)
                reasons.append(str(e))
        self._database.correlationWriter(dtheta, bounds, reasons)

        curve = np.linspace(-np.pi, np.pi, IDEAL_CURVE_POINTS)
        ideal = _ideal_curve(ideal_single_photon_correlation, curve, config.threshold)
        self._database.frameWriter(pd.DataFrame({'dtheta': curve, 'e_ideal': ideal}), 'correlation_ideal.csv')

        valid = [(d, b) for d, b in zip(dtheta, bounds) if b is not None]
        summary = {'threshold': config.threshold, 'valid_points': len(valid)}
        visible = [d for d, _ in valid]
        if visible and np.any(np.cos(visible) != 0):
            summary['visibility_est'] = fit_visibility(visible, [b.e_est for _, b in valid])
            summary['visibility_lower'] = fit_visibility(visible, [b.e_lower for _, b in valid])
            summary['visibility_upper'] = fit_visibility(visible, [b.e_upper for _, b in valid])
        if intensity_set is not None:
            summary['delta_L'] = bound_interval(intensity_set)
        self._database.summaryWriter(summary, 'correlation_summary.txt')
        if 'visibility_est' in summary:
            self.page_information.emit(f"visibility {summary['visibility_est']:.4f} "
                                       f"[{summary['visibility_lower']:.4f}, {summary['visibility_upper']:.4f}]")
        else:
            self.page_information.emit('no phase setting left enough coincidences for a visibility fit')

    def chshScan(self):
        config = self.config
        settings_list = self.chshSettings()
        batches = self.settingBatches(settings_list, CHSH_STREAM)
        by_label = {(s.label_a, s.label_b): b for s, b in zip(settings_list, batches)}
        t_grid = config.t_grid()
        results = scan_threshold(by_label, self.intensitySet(), t_grid)
        self._database.chshWriter(results)

        ideal = _ideal_curve(ideal_chsh, t_grid, settings_list)
        self._database.frameWriter(pd.DataFrame({'T': t_grid, 's_ideal': ideal}), 'chsh_ideal.csv')

        valid = [r for r in results if r.valid]
        if valid:
            best = max(valid, key=lambda r: r.s_lower)
            self.page_information.emit(f'max S- = {best.s_lower:.4f} at T = {best.T:.4g}')
            violating = [r.T for r in valid if r.s_est > 2]
            if violating:
                self.page_information.emit(f'S > 2 from T = {min(violating):.4g}')
        else:
            self.page_information.emit('no threshold left any coincidence')

    def tomography(self):
        config = self.config
        mle = config.mle_config()
        edges = mle.edges()
        settings_list = tomography_settings(config.tomography_dtheta_grid)
        if config.uses_decoy:
            hist = decoy_corrected_histogram(self.iterSettingBatches(settings_list, TOMOGRAPHY_STREAM),
                                             config.intensity_set(), edges, settings_list)
        else:
            batches = [b[0] for b in self.settingBatches(settings_list, TOMOGRAPHY_STREAM)]
            hist = histogram_from_batches(batches, settings_list, edges)

        povm = build_povm_elements(settings_list, edges, mle.cutoff)
        defect = max(povm.completeness_defect(s) for s in range(len(settings_list)))
        if defect > COMPLETENESS_TOL:
            raise NumericalError(f'POVM completeness defect {defect:.3e} above {COMPLETENESS_TOL}')
        if config.target == 'bell':
            target = TwoModeFockState.bell_state(mle.cutoff)
        else:
            target = TwoModeFockState.basis(0, 0, mle.cutoff)
        result = mle_reconstruct(hist, povm, mle, target)

        p_a, p_b = photon_number_distribution(result.rho)
        summary = {
            'target': config.target,
            'cutoff': mle.cutoff,
            'fidelity': result.fidelity,
            'multiphoton_mass': multiphoton_mass(result.rho),
            'iterations': result.iterations,
            'converged': result.converged,
            'log_likelihood': result.log_likelihood[-1],
            'trace': float(result.rho.trace().real),
            'min_eigenvalue': float(result.rho.eigenvalues()[0]),
            'completeness_defect': defect,
            'clamp_fraction': hist.clamp_fraction,
            'photon_number_a': p_a,
            'photon_number_b': p_b,
        }
        if config.uses_decoy:
            summary['delta_L'] = bound_interval(config.intensity_set())
        self._database.densityWriter(result.rho)
        self._database.summaryWriter(summary, 'tomography_summary.txt')
        self.page_information.emit(f'fidelity {result.fidelity:.4f}, multiphoton mass '
                                   f"{summary['multiphoton_mass']:.3e}")

    def decoyEstimate(self, batch_folder=None):
        """Bounded coincidence probabilities from persisted batches at the configured threshold"""
        config = self.config
        folder = batch_folder or self._database.path('batches')
        grouped = defaultdict(dict)
        for batch in self._database.batchFolderReader(folder):
            grouped[(batch.settings.label_a, batch.settings.label_b)][batch.intensity_label] = batch
        pipelines = {b.pipeline for per in grouped.values() for b in per.values()}
        if len(pipelines) != 1:
            raise ValueError(f'batches mix pipelines {sorted(pipelines)}')
        intensity_set = None if pipelines == {'ideal-fock'} else config.intensity_set()
        expected = list(range(1 if intensity_set is None else intensity_set.L + 1))
        rows = []
        for key in sorted(grouped):
            if sorted(grouped[key]) != expected:
                raise ValueError(f'setting {key}: missing intensity data, have labels {sorted(grouped[key])}')
            estimates = bounded_probabilities([grouped[key][k] for k in expected], intensity_set,
                                              config.threshold)
            for outcome, e in zip(OUTCOMES, estimates):
                rows.append([key[0], key[1], outcome, e.estimate, e.lower, e.upper])
        frame = pd.DataFrame(rows, columns=['setting_a', 'setting_b', 'outcome', 'estimate', 'lower', 'upper'])
        self._database.frameWriter(frame, 'decoy_estimate.csv')
        if intensity_set is not None:
            self.page_information.emit(f'Delta_L = {bound_interval(intensity_set):.6e}')

    def fairSamplingCheck(self):
        config = self.config
        rng = np.random.Generator(np.random.Philox(config.fs_seed))
        parity_zeroing = not config.inject_fault
        support = 2 if config.fs_cutoff == 1 else config.fs_cutoff + 1
        lines = [f'cutoff = {config.fs_cutoff}', f'inject_fault = {config.inject_fault}']
        max_residual = 0.0
        max_theta = 0.0
        total = config.fs_states * len(config.fs_thresholds)
        done = 0
        for index in range(config.fs_states):
            rho = random_density_matrix(rng, support, config.fs_cutoff)
            for T in config.fs_thresholds:
                check = verify_factorization(None, rho, T, config.fs_theta_grid, config.fs_cutoff, parity_zeroing)
                max_residual = max(max_residual, check.residual)
                max_theta = max(max_theta, check.theta_residual)
                lines.append(f'state={index} T={T:.6g} residual={check.residual:.3e} '
                             f'theta_residual={check.theta_residual:.3e}')
                done += 1
                self.signal_progress.emit(done, total)
        lines.append(f'max_residual = {max_residual:.3e}')
        lines.append(f'max_theta_residual = {max_theta:.3e}')
        if config.fs_cutoff > 1:
            verdict = 'REPORT-ONLY'
        elif max_residual <= config.fs_tolerance and max_theta <= THETA_INDEPENDENCE_TOL:
            verdict = 'PASS'
        else:
            verdict = 'FAIL'
        lines.append(verdict)
        self._database.reportWriter(lines, 'fair_sampling_report.txt')
        self.page_information.emit(f'fair sampling {verdict}: max residual {max_residual:.3e}')
        if verdict == 'FAIL':
            raise AcceptanceError(f'factorization residual {max_residual:.3e} '
                                  f'(theta {max_theta:.3e}) above tolerance')
