import numpy as np
import pytest

from qsirs import ModelParams


CASE1 = dict(chi=2.0, pi0=0.5, f0=1.0, xi0=2.0, gamma0=0.8, a0=4.0, b0=0.1,
             xi1=1.0, gamma1=0.5, b1=0.1, a1=6.0, f1=0.2, mu=0.675,
             delta0=0.0, delta1=0.0, epsilon=0.01, pi1=1.0)
CASE2 = dict(chi=2.0, delta0=0.0, delta1=1.0, pi0=0.2, pi1=0.2, a0=2.0,
             a1=3.0, b0=0.5, b1=0.5, f0=1.0, f1=0.1, gamma0=0.5, gamma1=0.5,
             xi0=3.0, xi1=3.0, epsilon=0.01, mu=0.45)

PRINCIPAL_Y0 = np.array([1.0 - 1e-4, 1e-4, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])


def case1_params(**overrides) -> ModelParams:
    return ModelParams(**{**CASE1, **overrides})


def case2_params(**overrides) -> ModelParams:
    return ModelParams(**{**CASE2, **overrides})


@pytest.fixture
def p1() -> ModelParams:
    return case1_params()


@pytest.fixture
def p2() -> ModelParams:
    return case2_params()


def random_valid_state(rng: np.random.Generator) -> np.ndarray:
    macro = rng.dirichlet(np.ones(5))
    g0 = rng.random()
    v0, v1 = rng.exponential(1.0, size=2)
    return np.array([*macro, g0, 1.0 - g0, v0, v1])
