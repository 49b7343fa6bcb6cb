import numpy as np
import pytest

import sizepop as sp
from sizepop.model import ModelIngredients


@pytest.fixture(scope="session")
def model():
    return sp.builtin_example()


@pytest.fixture(scope="session")
def equilibria_c0(model):
    return sp.find_equilibria(model, 0.0)


@pytest.fixture(scope="session")
def equilibria_c02(model):
    return sp.find_equilibria(model, 0.2)


def _full(value):
    def rate(s, P):
        return np.full_like(np.asarray(s, dtype=float), value)
    return rate


def make_model(m=6.0, beta=None, mu=None, gamma=None, beta_P=None, mu_P=None,
               gamma_P=None, gamma_s=None, gamma_sP=None, beta_PP=None,
               analytic_partials=True):
    """Model from plain callables with zero defaults for the partials."""
    zero = _full(0.0)
    return ModelIngredients(
        m=m,
        beta=beta or _full(0.0),
        mu=mu or _full(0.0),
        gamma=gamma or _full(1.0),
        beta_P=beta_P or zero,
        mu_P=mu_P or zero,
        gamma_P=gamma_P or zero,
        gamma_s=gamma_s or zero,
        gamma_sP=gamma_sP or zero,
        beta_PP=beta_PP or zero,
        analytic_partials=analytic_partials,
    )


@pytest.fixture
def constant_rate():
    return _full
