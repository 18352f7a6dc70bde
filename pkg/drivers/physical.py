from utils import DriverInterface
from modpack.homodyne_sim import draw_chunk
from modpack.states_channels import NoiseModel


class Driver(DriverInterface):
    """Coherent source; photodiode loss and additive electronic noise in each detector"""
    PIPELINE = 'physical'
    METHOD = ['Intensity', 'Settings', 'Intensity label', 'Quadratures', 'Photodiode efficiency',
              'Electronic noise']

    def performOpen(self, noise=None):
        self.noise = noise or NoiseModel()

    def performClose(self):
        pass

    def performSetValue(self, option, value):
        if option == 'Intensity':
            if not value >= 0:
                raise ValueError(f'intensity mu must be non-negative, got {value}')
            self.mu = float(value)
        elif option == 'Settings':
            self.settings = value
        elif option == 'Intensity label':
            self.intensity_label = int(value)
        else:
            raise ValueError(f'{self.PIPELINE}: cannot set {option!r}')
        return value

    def performGetValue(self, option, size=1, rng=None):
        if option == 'Quadratures':
            return draw_chunk(self.PIPELINE, self.mu, self.settings, self.noise, size, rng)
        elif option == 'Intensity':
            return self.mu
        elif option == 'Settings':
            return self.settings
        elif option == 'Intensity label':
            return self.intensity_label
        elif option == 'Photodiode efficiency':
            return self.noise.eta_pd
        elif option == 'Electronic noise':
            return self.noise.v_e
        raise ValueError(f'{self.PIPELINE}: unknown option {option!r}')
