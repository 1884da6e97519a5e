import numpy as np
import pytest

from squeezed_ati.field import LaserParams


@pytest.fixture
def lp():
    return LaserParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, n_max, cutoff):
    """Random normalized Fock amplitudes on |0>..|n_max>, zero-padded to cutoff."""
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[: n_max + 1] = rng.normal(size=n_max + 1) + 1j * rng.normal(size=n_max + 1)
    return amps / np.linalg.norm(amps)
