import logging
import os
import sys
from time import perf_counter

import numpy as np
import pandas as pd
import scipy
from PyQt5.QtCore import PYQT_VERSION_STR, QCoreApplication

from modpack.errors import AcceptanceError, ConfigError, NumericalError, PathEntError
from ui.view import CommandLineView
from utils import Measurement, TxtFunction, config_hash, load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_ACCEPTANCE = 3
EXIT_NUMERICAL = 4


class EntanglementCtrl:
    """Controller: one experiment stage per invocation."""

    def __init__(self, view, database):
        """Controller initializer."""
        self._view = view
        self._database = database
        self._measurement = Measurement(self._database)
        self._connectMeasureSignals()

    def _connectMeasureSignals(self):
        self._measurement.page_information.connect(self._view.pageTwoInformation)
        self._measurement.signal_progress.connect(self._view.setProgressBar)
        self._measurement.finished.connect(self.timeStop)

    def run(self, argv=None):
        """Parse, configure, run; returns the process exit code"""
        args = self._view.parseArguments(argv)
        self._view.setLogging(args.verbose)
        try:
            return self.procedureGo(args)
        except ConfigError as e:
            self._view.messageBox(f'config error: {e}')
            return EXIT_CONFIG
        except AcceptanceError as e:
            self._view.messageBox(f'acceptance failure: {e}')
            return EXIT_ACCEPTANCE
        except NumericalError as e:
            self._view.messageBox(f'numerical failure: {e}')
            return EXIT_NUMERICAL
        except (PathEntError, ValueError, OSError) as e:
            self._view.messageBox(f'{args.command} failed: {e}')
            return EXIT_ERROR
        except Exception:
            logger.exception('%s failed', args.command)
            return EXIT_ERROR

    def procedureGo(self, args):
        """measure start"""
        start = perf_counter()
        config = load_config(args.config).override(
            seed=args.seed, scale=args.scale, workers=args.workers, out=args.out,
            inject_fault=True if getattr(args, 'inject_fault', False) else None)
        self._database.setFolder(config.out)
        self._measurement.setInfo(config)
        options = {}
        if args.command == 'decoy-estimate' and args.batches:
            options['batch_folder'] = args.batches
        try:
            self._measurement.startMeasure(args.command, **options)
        finally:
            if self._database.written:
                self.writeManifest(config, args.command, perf_counter() - start)
        return EXIT_OK

    def timeStop(self, file_count):
        """measure stop"""
        logger.info('%d files written to %s', file_count, self._database.folder)

    def writeManifest(self, config, stage, elapsed):
        outputs = [name for name in self._database.written if name != 'manifest.json']
        manifest = {
            'config_hash': config_hash(config.canonical_text()),
            'stage': stage,
            'outputs': outputs,
            'versions': {
                'numpy': np.__version__,
                'scipy': scipy.__version__,
                'pandas': pd.__version__,
                'PyQt5': PYQT_VERSION_STR,
            },
            'timings': dict(self._measurement.timings, total=round(elapsed, 3)),
        }
        missing = [name for name in outputs
                   if not os.path.exists(self._database.path(name)) or not os.path.getsize(self._database.path(name))]
        if missing:
            logger.warning('manifest lists missing or empty outputs: %s', missing)
        self._database.manifestWriter(manifest)


def main(argv=None):
    app = QCoreApplication.instance() or QCoreApplication(sys.argv[:1])
    view = CommandLineView()
    database = TxtFunction()
    controller = EntanglementCtrl(view=view, database=database)
    return controller.run(argv)


if __name__ == "__main__":
    sys.exit(main())
