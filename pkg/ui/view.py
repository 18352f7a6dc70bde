#!/usr/bin/env python
import argparse
import logging

from PyQt5.QtCore import QObject, pyqtSlot

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

SUBCOMMANDS = {
    'simulate': 'generate and persist the CHSH sample batches, vacuum included',
    'correlation-scan': 'bounded correlation E versus phase difference at a fixed threshold',
    'chsh-scan': 'bounded CHSH value S versus threshold',
    'tomography': 'decoy-corrected histograms and maximum-likelihood density matrix',
    'decoy-estimate': 'bounded single-photon coincidence probabilities from persisted batches',
    'fair-sampling-check': 'numerical check of the post-selection factorization',
}


class CommandLineView(QObject):
    """Command line counterpart of the main window: arguments in, page information out."""

    def __init__(self):
        super().__init__()
        self.parser = self._buildParser()
        self.last_progress = None

    def _buildParser(self):
        parser = argparse.ArgumentParser(
            prog='pathent',
            description='Simulation and certification of single-photon path entanglement '
                        'measured by balanced homodyne detection.')
        subparsers = parser.add_subparsers(dest='command', metavar='command')
        subparsers.required = True
        for name, description in SUBCOMMANDS.items():
            sub = subparsers.add_parser(name, help=description, description=description)
            sub.add_argument('--config', metavar='PATH', help='experiment config (INI); defaults when omitted')
            sub.add_argument('--seed', type=int, metavar='U64', help='master seed, overrides the config')
            sub.add_argument('--out', metavar='DIR', help='output folder (default data/output)')
            sub.add_argument('--scale', type=int, metavar='K', help='divide every sample count by K')
            sub.add_argument('--workers', type=int, metavar='N', help='parallel chunk workers')
            sub.add_argument('-v', '--verbose', action='store_true', help='debug logging')
            if name == 'decoy-estimate':
                sub.add_argument('--batches', metavar='DIR', help='batch folder (default <out>/batches)')
            if name == 'fair-sampling-check':
                sub.add_argument('--inject-fault', action='store_true',
                                 help='skip the odd-overlap zeroing; the check must then fail')
        return parser

    def parseArguments(self, argv=None):
        return self.parser.parse_args(argv)

    def setLogging(self, verbose=False):
        logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, force=True)

    @pyqtSlot(str)
    def pageTwoInformation(self, text):
        logger.info(text)

    @pyqtSlot(int, int)
    def setProgressBar(self, done, total):
        percent = 100 * done // max(total, 1)
        if percent != self.last_progress:
            self.last_progress = percent
            logger.debug('progress %d/%d (%d%%)', done, total, percent)

    def messageBox(self, text):
        """Error shown to the user"""
        logger.error(text)
