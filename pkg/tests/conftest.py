import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import fptcage as F

settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

# canonical parameter sets used across the suite (match the shipped configs)
FREE = dict(x0=5.0, L=8.0, D=1.0)
BIASED = dict(x0=6.0, L=10.0, D=1.0, alpha=-0.3, gamma=1.0)
OU = dict(x0=1.5, L=3.0, D=1.0, k=1.0, a=1.0, gamma=1.0)
CAGE = dict(x0=2.0, L=3.0)
CAGE_EXPAND = dict(v0=-0.2, vL=0.1)
CAGE_SHRINK = dict(v0=0.2, vL=-0.1)


@pytest.fixture(scope="session")
def free_p():
    return F.ProcessSpec.free(FREE["D"])


@pytest.fixture(scope="session")
def biased_p():
    return F.ProcessSpec.biased(BIASED["D"], alpha=BIASED["alpha"], gamma=BIASED["gamma"])


@pytest.fixture(scope="session")
def ou_p():
    return F.ProcessSpec.ou(OU["D"], OU["k"], OU["a"], gamma=OU["gamma"])


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
