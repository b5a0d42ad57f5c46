import numpy as np
import pytest

from sta_trapkit import TrapPair

AMU = 1.66053906660e-27


@pytest.fixture
def pair():
    """3 MHz to 1 MHz expansion of a calcium-mass ion in 20 ns."""
    return TrapPair(omega0=2 * np.pi * 3e6, omegaf=2 * np.pi * 1e6,
                    tf=20e-9, mass=40 * AMU)


@pytest.fixture
def pair_at():
    def make(tf):
        return TrapPair(omega0=2 * np.pi * 3e6, omegaf=2 * np.pi * 1e6,
                        tf=tf, mass=40 * AMU)
    return make
