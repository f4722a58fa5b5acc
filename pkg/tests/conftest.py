import hypothesis
import numpy as np
import pytest

from attrsbm.network import AttributedNetwork

np.seterr(all="raise", under="ignore")

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_network(rng, n, p, attr_scale=10.0):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return AttributedNetwork(n, np.stack([iu[keep], ju[keep]], 1), rng.normal(0, attr_scale, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
