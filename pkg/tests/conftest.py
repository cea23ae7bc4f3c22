import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from isocond import fivebar
from isocond.errors import IsocondError
from isocond.types import AssemblyMode, Geometry

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

G = Geometry(6.0, 8.0, 5.0)

angles = st.floats(-math.pi, math.pi, allow_nan=False)
geometries = st.builds(
    Geometry,
    st.floats(0.5, 12.0),
    st.floats(1.0, 10.0),
    st.floats(1.0, 10.0),
)


@pytest.fixture
def g():
    return G


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def posture_or_none(geom, t1, t2, mode=AssemblyMode.PLUS):
    try:
        q = fivebar.direct_kinematics(geom, t1, t2, mode)
    except IsocondError:
        return None
    return q


def random_nonsingular(geom, n, rng, margin=1e-6):
    out = []
    while len(out) < n:
        t1, t2 = rng.uniform(-math.pi, math.pi, 2)
        mode = AssemblyMode.PLUS if rng.random() < 0.5 else AssemblyMode.MINUS
        q = posture_or_none(geom, t1, t2, mode)
        if q is None:
            continue
        if min(abs(q.sin_a), abs(q.sin_b)) < margin or abs(math.sin(q.delta)) < margin:
            continue
        out.append(q)
    return out


# One summary line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
