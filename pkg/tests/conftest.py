import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(rng, n, real=False):
    from qgalton.statevector import State

    a = rng.normal(size=2**n)
    if not real:
        a = a + 1j * rng.normal(size=2**n)
    return State(a / np.linalg.norm(a))


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "tests": {}})
    prev = entry["tests"].get(item.name, True)
    entry["tests"][item.name] = prev and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        failed = [name for name, ok in entry["tests"].items() if not ok]
        status = "FAIL" if failed else "PASS"
        line = f"criterion {number}: {status}  {entry['title']}"
        if failed:
            line += "  [failing: " + ", ".join(failed) + "]"
        terminalreporter.write_line(line)
