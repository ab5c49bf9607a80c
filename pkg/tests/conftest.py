import numpy as np
import pytest

from datamarket.config import config_from_dict
from datamarket.experiments import build_world, init_population

# a small but busy world: fast enough for per-test simulations
SMALL = [
    "grid.width=8",
    "grid.height=8",
    "grid.buyer_hotspots=[{q=2,r=2,intensity=1.0,decay=0.01},{q=6,r=5,intensity=0.8,decay=0.01}]",
    "grid.seller_hotspots=[{q=3,r=3,intensity=1.0,decay=0.01},{q=5,r=6,intensity=0.9,decay=0.01}]",
    "grid.density_floor=0.0",
    "agents.pkg_min=8.0",
    "agents.pkg_max=30.0",
    "agents.level_step=0.1",
    "plan.T=25",
    "plan.seeds=[0, 1]",
]


def small_config(*extra):
    return config_from_dict({}, [*SMALL, *extra])


@pytest.fixture(scope="session")
def small_cfg():
    return small_config()


@pytest.fixture(scope="session")
def small_grid(small_cfg):
    return build_world(small_cfg)


@pytest.fixture
def small_pop(small_cfg, small_grid):
    return init_population(small_cfg, small_grid, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.REPORT):
        terminalreporter.write_line(acceptance.REPORT[n])
