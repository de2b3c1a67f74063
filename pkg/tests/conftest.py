import numpy as np
import pytest

from async_tm import Clause, FeedbackRng, Polarity, TMConfig


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def xor_config():
    return TMConfig(
        clauses=10, margin=5, specificity=3.0, depth=128, epochs=50, workers=8, seed=1
    )


@pytest.fixture
def rng():
    return FeedbackRng(1234)


@pytest.fixture
def make_clause():
    """Build a clause whose included literals (1-based) are given explicitly."""

    def make(o, included=(), polarity=Polarity.POSITIVE, depth=128, pool_size=0):
        clause = Clause(polarity, o, pool_size=pool_size, depth=depth)
        states = np.full(2 * o, depth, dtype=np.int32)
        for k in included:
            states[k - 1] = depth + 1
        clause.load_states(states)
        return clause

    return make
