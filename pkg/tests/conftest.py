import numpy as np
import pytest

from quantum_core import make_rng


SEED = 20240611


@pytest.fixture
def rng():
    return make_rng(SEED)


def within_three_sigma(frequency: float, expected: float, trials: int) -> bool:
    """Bernoulli frequency check at three standard errors (with a small floor)."""
    se = np.sqrt(max(expected * (1.0 - expected), 1e-4) / trials)
    return abs(frequency - expected) <= 3.0 * se
