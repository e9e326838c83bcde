import pytest

from gelfex.phaseplane import heteroclinic
from gelfex.profiles import Dimension, RadialGrid, solve_profile

# session-scoped caches: profiles and orbits are immutable, so sharing them
# across tests is safe and keeps the suite fast


@pytest.fixture(scope="session")
def profiles():
    out = {}
    for n in (3, 4, 5, 6, 7, 8, 9, 10, 11, 12):
        out[n] = solve_profile(Dimension(n))
    return out


@pytest.fixture(scope="session")
def long_profiles():
    grid = RadialGrid.log_uniform(r_max=1.1e6)
    return {n: solve_profile(Dimension(n), grid) for n in (3, 4, 10)}


@pytest.fixture(scope="session")
def orbits(profiles):
    return {n: heteroclinic(profiles[n], s_end=40.0)
            for n in (3, 4, 5, 6, 7, 8, 9, 10, 11, 12)}
