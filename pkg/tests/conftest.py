from pathlib import Path

import numpy as np
import pytest

from fracp import AngularKernel, GridSpec, make_model, solve, validate

SMALL_GRID = GridSpec(M=64, Rmax=12.0)


@pytest.fixture(scope="session")
def ref_params():
    return validate(2, 0.5, 2.0)


@pytest.fixture(scope="session")
def ref_model(ref_params):
    return make_model(1.0, 3.0, ref_params)


@pytest.fixture(scope="session")
def ref_kernel(ref_params):
    return AngularKernel.build(ref_params, GridSpec().nodes())


@pytest.fixture(scope="session")
def small_kernel(ref_params):
    return AngularKernel.build(ref_params, SMALL_GRID.nodes())


@pytest.fixture(scope="session")
def ref_solution(ref_params, ref_model, ref_kernel):
    """The reference constrained solve, shared by the solver, identity and acceptance tests."""
    return solve(ref_model, ref_params, kernel=ref_kernel)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def configs_dir():
    return Path(__file__).resolve().parents[1] / "configs"
