import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_stable_loop(rng, max_order=3):
    """Proper real loop with poles and zeros in the left half-plane and modest gain."""
    from fbcool.lti import RationalTransferFunction
    n = int(rng.integers(1, max_order + 1))
    poles = -rng.uniform(0.2, 5.0, n)
    zeros = -rng.uniform(0.2, 5.0, int(rng.integers(0, n + 1)))
    den = np.polynomial.polynomial.polyfromroots(poles)
    num = rng.uniform(0.2, 3.0) * np.polynomial.polynomial.polyfromroots(zeros)
    return RationalTransferFunction(tuple(num), tuple(den))


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
