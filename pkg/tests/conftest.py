import pytest

from ccbvp import Exponents, NonlinearitySpec

# Frozen oracle values for p = 4, q = 1.5 (mpmath, 30 digits; see tests/test_timemap.py
# for how they are reproduced from Beta functions or an independent quadrature).
LAMBDA_J = [9.045635364564093, 51.169840851392955, 141.00750034350142, 289.4603316660509,
            505.66638937103505, 797.6588775284338]
LAMBDA_STAR_0 = -220.27024654411818818
ZETA_0_SUP = 3.70814935460274383686770069439


@pytest.fixture(scope="session")
def exp():
    return Exponents(4.0, 1.5)


@pytest.fixture(scope="session")
def model(exp):
    return NonlinearitySpec.model(exp)


# acceptance criteria register here (tests/test_acceptance.py) and are listed
# once more at the end of the run, one line each
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
