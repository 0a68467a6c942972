import numpy as np
import pytest
from models.DoubleIntegratorConfig import DoubleIntegratorConfig
from models.GaussianState import GaussianState
from models.StochasticProblem import StochasticProblem
from processing.problems import build_double_integrator


def _additive_dynamics(x, u, w, k):
    return x + u + w


def _zero_stage_cost(x, u, w, k):
    return np.zeros(np.broadcast_shapes(x.shape[:-1], u.shape[:-1]))


def _zero_terminal_cost(x):
    return np.zeros(x.shape[:-1])


def make_problem(nx: int = 1,
                 nu: int = 1,
                 N: int = 3,
                 dynamics=_additive_dynamics,
                 stage_cost=_zero_stage_cost,
                 terminal_cost=_zero_terminal_cost,
                 mean=None,
                 cov=None,
                 noise_cov=None,
                 **kwargs) -> StochasticProblem:
    """Small generic problem; the defaults are x' = x + u + w with zero costs."""
    mean = np.zeros(nx) if mean is None else mean
    cov = np.zeros((nx, nx)) if cov is None else cov
    noise_cov = np.zeros((nx, nx)) if noise_cov is None else noise_cov
    return StochasticProblem(nx=nx, nu=nu, nw=nx, N=N,
                             dynamics=dynamics,
                             stage_cost=stage_cost,
                             terminal_cost=terminal_cost,
                             noise_cov=noise_cov,
                             init=GaussianState(mean=mean, cov=cov),
                             **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def di_config():
    return DoubleIntegratorConfig()


@pytest.fixture
def di_problem(di_config):
    return build_double_integrator(di_config)


@pytest.fixture
def short_di_config():
    """Reachable short-horizon double integrator that solves in well under a second."""
    return DoubleIntegratorConfig(N=8, x0=[-0.2, 0.0])


@pytest.fixture
def problem_factory():
    return make_problem
