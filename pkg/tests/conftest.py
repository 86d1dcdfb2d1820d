import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def circle500():
    from ggpucb import sample_circle
    return sample_circle(500, 0)


@pytest.fixture(scope="session")
def circle_spectrum(circle500):
    from ggpucb import graph_spectrum, suggest_connectivity
    h = suggest_connectivity(circle500, 4, "experiment")
    return graph_spectrum(circle500, h, 40)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
