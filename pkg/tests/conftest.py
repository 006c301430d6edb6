import numpy as np
import pytest

from growthmech import _kernels


@pytest.fixture(params=sorted(_kernels.backends()))
def backend(request):
    """Each available kernel module in turn."""
    return _kernels.backends()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, n, count=None, shift=None):
    shape = (n, n) if count is None else (count, n, n)
    A = rng.normal(size=shape)
    shift = n if shift is None else shift
    return A @ np.swapaxes(A, -1, -2) + shift * np.eye(n)
