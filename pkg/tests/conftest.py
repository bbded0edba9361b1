import numpy as np
import pytest

from growfrag.direct import solve_steady
from growfrag.harness import golden_config

_STEADY_CACHE = {}


@pytest.fixture(scope="session")
def steady():
    """Memoized steady-state solver keyed by (config id, cells, initial)."""

    def solve(config_id: str, cells: int = 300, initial: str = "step"):
        key = (config_id, cells, initial)
        if key not in _STEADY_CACHE:
            config = golden_config(config_id, cells=cells, initial=initial)
            _STEADY_CACHE[key] = (config, solve_steady(config))
        return _STEADY_CACHE[key]

    return solve


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
