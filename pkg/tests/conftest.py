"""Shared fixtures and hypothesis strategies"""

import numpy as np
import pytest
from hypothesis import assume
from hypothesis import strategies as st

from sisi.dynamics import Params, SimplexPoint, validate_params

FIG1 = dict(b=0.2, alpha=0.3, beta1=0.7, beta2=0.6, k1=1.0, k2=0.3)
FIG2 = dict(FIG1, k1=0.5)
LAMBDA16_PARAMS = dict(b=0.2, alpha=0.3, beta1=0.7, beta2=0.0, k1=1.0, k2=0.3)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@st.composite
def valid_params(draw, **fixed):
    values = {name: fixed.get(name, draw(unit)) for name in ("b", "alpha", "beta1", "beta2", "k1", "k2")}
    p = Params(**values)
    assume(validate_params(p).is_qso)
    return p


@st.composite
def simplex_points(draw):
    weights = [draw(unit) for _ in range(4)]
    total = sum(weights)
    assume(total > 1e-3)
    return SimplexPoint(*(w / total for w in weights))


@pytest.fixture
def fig1():
    return Params(**FIG1)


@pytest.fixture
def fig2():
    return Params(**FIG2)


@pytest.fixture
def lambda16_params():
    return Params(**LAMBDA16_PARAMS)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def draw_valid(rng, count, accept, b_range=(0.05, 0.5), alpha_range=(0.05, 0.5), **fixed):
    """Seeded rejection sampling of QSO parameter sets satisfying accept(p)"""
    drawn = []
    while len(drawn) < count:
        values = {
            "b": rng.uniform(*b_range),
            "alpha": rng.uniform(*alpha_range),
            "beta1": rng.uniform(0, 1),
            "beta2": rng.uniform(0, 1),
            "k1": rng.uniform(0, 1),
            "k2": rng.uniform(0, 1),
        }
        values.update(fixed)
        p = Params(**values)
        if validate_params(p).is_qso and accept(p):
            drawn.append(p)
    return drawn
