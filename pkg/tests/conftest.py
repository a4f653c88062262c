from __future__ import annotations

import pytest

from gfrag import DislocationMeasure, ModelParams


@pytest.fixture
def config_a() -> ModelParams:
    """a=0, b=0, alpha=0, unit atom at 1/2: kappa(q) = 2^(1-q) + q/2 - 1."""
    return ModelParams(0.0, 0.0, 0.0, DislocationMeasure(atoms=((0.5, 1.0),)))


@pytest.fixture
def config_b() -> ModelParams:
    """a=0, b=-0.4, alpha=-1, unit atom at 1/2: kappa(q) = 0.1 q + 2^(1-q) - 1."""
    return ModelParams(0.0, -0.4, -1.0, DislocationMeasure(atoms=((0.5, 1.0),)))


@pytest.fixture
def config_c() -> ModelParams:
    """Unit probability atom at 0.7 with growth c = 0.5 (so b = 0.2), alpha=-1."""
    return ModelParams(0.0, 0.2, -1.0, DislocationMeasure(atoms=((0.7, 1.0),)))


def make_config_d(alpha: float = -1.0) -> ModelParams:
    return ModelParams(1.0, -1.0, alpha, DislocationMeasure())


@pytest.fixture
def config_d() -> ModelParams:
    """a=1, b=-1, K empty: kappa(q) = q^2 - 2q (roots 0 and 2)."""
    return make_config_d()
