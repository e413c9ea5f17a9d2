import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from jeffreys_mala import LgssModel, SvModel, bootstrap_filter, ffbsm_score, filter_score
from jeffreys_mala.rng import stream

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) the numba kernels before anything is timed."""
    sv = SvModel()
    batch = sv.simulate([0.5], 8, stream(0, 9000))
    filter_score(sv.nlss, [0.5], batch, 8, stream(0, 9001))
    ps = bootstrap_filter(sv.nlss, [0.5], batch, 8, stream(0, 9002))
    ffbsm_score(ps, sv.nlss, [0.5], batch)
    lg = LgssModel()
    lbatch = lg.simulate(lg.theta_default, 8, stream(0, 9003))
    filter_score(lg.nlss, lg.theta_default, lbatch, 8, stream(0, 9004))
    yield


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
