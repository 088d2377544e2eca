import numpy as np
import pytest
from hypothesis import settings

from tamegeo import _accel
from tamegeo.core_sets import ImplicitSetSpec, sample
from tamegeo.subgradients import PiecewiseFn

settings.register_profile("tamegeo", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("tamegeo")

# acceptance results, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


X0, X1 = ["var", 0], ["var", 1]

ABSXY = {
    "kind": "piecewise_function",
    "arity": 2,
    "lipschitz_bound": 2.0,
    "pieces": [
        {"region": [X0], "value": ["*", X0, X1], "gradient": [X1, X0]},
        {"region": [["-", X0]], "value": ["*", -1, X0, X1], "gradient": [["-", X1], ["-", X0]]},
    ],
}


def make_absxy():
    return PiecewiseFn(ABSXY["arity"], ABSXY["pieces"], ABSXY["lipschitz_bound"])


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    _accel.warmup()


@pytest.fixture(scope="session")
def absxy():
    return make_absxy()


def parabola_cloud(step=5e-5):
    spec = ImplicitSetSpec(2, [["-", X1, ["*", X0, X0]]], [], [[-0.11, 0.11], [-0.002, 0.013]])
    return sample(spec, step)


def cusp_cloud(step=5e-5):
    spec = ImplicitSetSpec(2, [["-", ["*", X1, X1], ["pow", X0, 3]]], [X0], [[-0.01, 0.06], [-0.016, 0.016]])
    return sample(spec, step)


@pytest.fixture(scope="session")
def parabola():
    return parabola_cloud()


@pytest.fixture(scope="session")
def cusp():
    return cusp_cloud()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
