import numpy as np
import pytest

from spatial_mobility import _kernels
from spatial_mobility.instance import build_weight_matrices, paper_instance
from spatial_mobility.model import AssignmentMatrix

# Candidate tables of the three-site test instance, origin -> weights.
TABLE_1 = {2: [76, 67, 43, 43, 29, 22, 20, 16, 13], 3: [80, 41]}
TABLE_2 = {1: [83, 78, 76, 69, 58, 21, 9], 3: [86, 74, 60, 57, 39]}
TABLE_3 = {1: [64, 27, 7], 2: [67, 11, 4]}
TABLES = {1: TABLE_1, 2: TABLE_2, 3: TABLE_3}

# Optimal sub-matrices as printed, one bit row per origin.
X1 = [[1, 1, 1, 1, 1, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0, 0, 0, 0]]
X2 = [[1, 1, 1, 1, 0, 0, 0], [1, 1, 1, 0, 0, 0, 0]]
X3 = [[1, 1, 1], [1, 1, 0]]

OPTIMAL_PREFIXES = {(2, 1): 5, (3, 1): 2, (1, 2): 4, (3, 2): 3, (1, 3): 3, (2, 3): 2}

BACKENDS = sorted(_kernels.IMPLEMENTATIONS)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._acceptance = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        item.config._acceptance.append((mark.args[0], mark.args[1], rep.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config._acceptance
    if not results:
        return
    grouped = {}
    for number, title, outcome in results:
        grouped.setdefault((number, title), []).append(outcome)
    terminalreporter.section("acceptance criteria")
    for (number, title), outcomes in sorted(grouped.items()):
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {number}: {title} ({len(outcomes)} checks)")


@pytest.fixture(scope="session", autouse=True)
def _jit_warm():
    _kernels.warmup()


@pytest.fixture(scope="session")
def paper():
    return paper_instance()


@pytest.fixture(scope="session")
def beta(paper):
    return build_weight_matrices(paper)


@pytest.fixture(scope="session")
def x_opt():
    return AssignmentMatrix(tuple(np.array(g, dtype=np.uint8) for g in (X1, X2, X3)))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
