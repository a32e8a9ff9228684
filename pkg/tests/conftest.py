import pytest

from rackfabric.solver import SCENARIOS, Instance
from rackfabric.topology import build_default_rack
from rackfabric.workload import generate_apps

# criterion number -> (summary, every recorded phase passed)
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, summary): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (report.when == "call" or report.failed):
        return
    number, summary = marker.args
    _, ok = ACCEPTANCE.get(number, (summary, True))
    ACCEPTANCE[number] = (summary, ok and report.passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, (summary, ok) in sorted(ACCEPTANCE.items()):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {summary}")


@pytest.fixture(scope="session")
def reference_apps():
    return tuple(generate_apps(42, 15))


@pytest.fixture
def reference_instance(reference_apps):
    return Instance(build_default_rack(9, 2, 50), reference_apps, SCENARIOS["I"])
