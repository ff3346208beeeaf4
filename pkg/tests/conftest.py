import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import cartanflow as cf
from cartanflow.oracles import InstanceGenerator

settings.register_profile(
    "default", max_examples=40, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

FAMILY_NAMES = [
    "real-sym-evd:4",
    "herm-evd:3",
    "real-svd:3x2",
    "real-svd:2x2",
    "complex-svd:3x2",
    "skew-evd:4",
    "skew-evd:5",
]


@pytest.fixture(params=FAMILY_NAMES)
def fam(request):
    return cf.parse_family(request.param)


def gen_for(fam, seed=0, profile="generic"):
    return InstanceGenerator(fam, seed, profile)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def fro(x):
    if isinstance(x, cf.BlockPair):
        return float(np.sqrt(np.linalg.norm(x.left) ** 2 + np.linalg.norm(x.right) ** 2))
    return float(np.linalg.norm(x))
