import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
energies = st.floats(min_value=0.02, max_value=2.0, allow_nan=False, allow_infinity=False)


@st.composite
def phase_points(draw, r_min=0.0):
    x = np.array([draw(finite) for _ in range(4)])
    if r_min > 0 and math.hypot(x[0], x[1]) < r_min:
        x[0] += r_min * (1 if x[0] >= 0 else -1)
    return x


@st.composite
def planar(draw, r_max=2.0):
    r = draw(st.floats(min_value=0.0, max_value=r_max))
    t = draw(st.floats(min_value=0.0, max_value=2 * math.pi))
    return (r * math.cos(t), r * math.sin(t))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
