import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import coxfield as cf

settings.register_profile(
    "suite",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260814)


@pytest.fixture(scope="session")
def balanced_service():
    """Unit-mean hyperexponential (0.5, 0.5) / (2, 2/3) as a Coxian."""
    return cf.hyperexp_to_coxian(
        cf.HyperExponential((0.5, 0.5), (2.0, 2.0 / 3.0))
    )
