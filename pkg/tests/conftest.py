import numpy as np
import pytest

from obsmpc.config import reference_config, parse_config
from obsmpc.estimator import MeasurementWindow
from obsmpc.model import NoiseSpec, bearing_observe, draw_noise


@pytest.fixture(scope="session")
def reference_cfg():
    return parse_config(reference_config())


@pytest.fixture(scope="session")
def reference_setup(reference_cfg):
    return reference_cfg.to_setup()


def arc_states(p, radius, start_angle, spread, n):
    """States on a circular arc around the landmark p."""
    angles = start_angle + np.linspace(0.0, spread, n)
    return np.asarray(p) + radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def window_from_states(states, p, delta=0.1, noise: NoiseSpec = None, noise_offset=0):
    """Build a full window whose observations are bearings towards p, with
    optional bounded noise; controls are back-computed from the states."""
    states = np.asarray(states, dtype=float)
    w = MeasurementWindow(len(states))
    for k, x in enumerate(states):
        y = bearing_observe(x, p)
        if noise is not None:
            y = y + draw_noise(noise, 2, noise_offset + k)
        u = (states[k] - states[k - 1]) / delta if k > 0 else None
        w.push(x, y, control=u)
    return w
