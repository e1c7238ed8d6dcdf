import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from beliefgames.dsl import PayoffSpec
from beliefgames.game import BeliefKernel, FiniteGame, State

settings.register_profile(
    "default", deadline=None, max_examples=40, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_game(payoffs, beliefs, states=(0.0,), types=((0.0,), (0.0,)), actions=((0.0, 1.0), (0.0, 1.0))):
    n = len(types)
    specs = [
        p if isinstance(p, PayoffSpec) else PayoffSpec.from_expr(p, n) if isinstance(p, str) else PayoffSpec.from_table(p)
        for p in payoffs
    ]
    kernels = [b if isinstance(b, BeliefKernel) else BeliefKernel(i, b) for i, b in enumerate(beliefs)]
    st = [State(f"s{k}", float(v)) for k, v in enumerate(states)]
    return FiniteGame(st, [list(t) for t in types], [list(a) for a in actions], specs, kernels)


@pytest.fixture
def matrix_game():
    """2x2 complete-information game with distinct payoffs for each player."""
    u1 = np.array([[3.0, 0.0], [5.0, 1.0]]).reshape(2, 2, 1, 1, 1)
    u2 = np.array([[3.0, 5.0], [0.0, 1.0]]).reshape(2, 2, 1, 1, 1)
    return make_game([u1, u2], [[[1.0]], [[1.0]]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
