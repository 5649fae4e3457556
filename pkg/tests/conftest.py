import pytest

from helpers import DATA, mirror_for_sql
from optocool.twophoton import make_grid


@pytest.fixture
def grid():
    return make_grid(1.0, 1000.0, 1000)


@pytest.fixture
def small_grid():
    return make_grid(1.0, 1000.0, 200)


@pytest.fixture
def mirror65():
    return mirror_for_sql(65.0)


@pytest.fixture
def data_dir():
    return DATA


CRITERIA = {
    1: "closed-form identity chain",
    2: "graph oracle",
    3: "A+ cross-checks",
    4: "point occupation desk value",
    5: "dephasing limit and range",
    6: "crossover equality",
    7: "band convention and thermometry round trip",
    8: "optimizer behaviour",
    9: "quantum-only bound on published totals",
    10: "feedforward",
    11: "full graph vs simplified plant",
    12: "CLI determinism and errors",
}
_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or rep.failed:
        _outcomes.setdefault(mark.args[0], []).append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        runs = _outcomes[n]
        bad = [name for name, ok in runs if not ok]
        status = "PASS" if not bad else "FAIL"
        tail = f" ({len(bad)}/{len(runs)} checks failed)" if bad else ""
        tr.write_line(f"criterion {n:2d} {status}: {CRITERIA.get(n, '')}{tail}")
