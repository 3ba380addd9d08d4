# tests/conftest.py
import pytest
from loguru import logger

from src.solver.tableaux import builtin_tableau, tableau_names

_GSA = ["Euler(1,1,1)", "ARS(2,2,2)", "CN(2,2,2)"]


@pytest.fixture(params=tableau_names(), ids=tableau_names())
def tableau(request):
    return builtin_tableau(request.param)


@pytest.fixture(params=_GSA, ids=_GSA)
def gsa_tableau(request):
    return builtin_tableau(request.param)


@pytest.fixture(autouse=True)
def _quiet_logs():
    logger.remove()
    yield


from tests.data_fixtures import (
    rng,
    periodic_grid,
    rest_state,
    well_prepared_state,
    scalar_field,
    config_path,
    small_vortex_config,
)
