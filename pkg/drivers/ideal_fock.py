from utils import DriverInterface
from modpack.fock_core import MAX_PHOTON_NUMBER
from modpack.homodyne_sim import draw_chunk


class Driver(DriverInterface):
    """Fock state |n> on the splitter, lossless noiseless detectors; intensity is ignored"""
    PIPELINE = 'ideal-fock'
    METHOD = ['Photon number', 'Settings', 'Intensity label', 'Quadratures']

    def __init__(self):
        super().__init__()
        self.photon_number = 1

    def performOpen(self, noise=None):
        # loss and electronic noise are not modelled for a Fock input
        pass

    def performClose(self):
        pass

    def performSetValue(self, option, value):
        if option == 'Photon number':
            if not 0 <= int(value) <= MAX_PHOTON_NUMBER:
                raise ValueError(f'photon number must lie in [0, {MAX_PHOTON_NUMBER}], got {value}')
            self.photon_number = int(value)
        elif option == 'Settings':
            self.settings = value
        elif option == 'Intensity label':
            self.intensity_label = int(value)
        elif option == 'Intensity':
            pass
        else:
            raise ValueError(f'{self.PIPELINE}: cannot set {option!r}')
        return value

    def performGetValue(self, option, size=1, rng=None):
        if option == 'Quadratures':
            return draw_chunk(self.PIPELINE, 0.0, self.settings, self.noise, size, rng, self.photon_number)
        elif option == 'Photon number':
            return self.photon_number
        elif option == 'Settings':
            return self.settings
        elif option == 'Intensity label':
            return self.intensity_label
        raise ValueError(f'{self.PIPELINE}: unknown option {option!r}')
