import numpy as np
import pytest

from opmeans.field import GridField


def trig_field(dim, n_points=16, kmax=3, count=6, seed=0, length=2 * np.pi):
    """Random real trigonometric polynomial with integer wavenumbers |k_i| <= kmax."""
    rng = np.random.default_rng(seed)
    modes = [(rng.integers(-kmax, kmax + 1, size=dim), rng.uniform(0, 2 * np.pi), rng.normal())
             for _ in range(count)]
    scale = 2 * np.pi / length

    def func(*xs):
        out = np.zeros(np.broadcast(*xs).shape)
        for k, phase, amp in modes:
            out = out + amp * np.cos(scale * sum(ki * x for ki, x in zip(k, xs)) + phase)
        return out

    return GridField.on_box(func, n_points, length, dim), func


@pytest.fixture
def smooth1d():
    return trig_field(1, 64)[0]


@pytest.fixture
def smooth2d():
    return trig_field(2, 24, seed=1)[0]


@pytest.fixture
def smooth3d():
    return trig_field(3, 16, seed=2)[0]
