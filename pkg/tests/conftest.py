import math
import sys

import numpy as np
import pytest

from noisysort.seqcore import Energy

E = math.e


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def energy_e():
    return Energy(E)


def within_sigmas(count: int, trials: int, prob: float, k: float = 3.0) -> bool:
    sigma = math.sqrt(trials * prob * (1.0 - prob))
    return abs(count - trials * prob) <= k * max(sigma, 1e-12)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
