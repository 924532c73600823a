import numpy as np
import pytest

from gatecraft.circuit_spectrum import CircuitParams, build_coupled_system


@pytest.fixture(scope="session")
def system78():
    return build_coupled_system(CircuitParams.reference_device(78.0, 0.010))


@pytest.fixture(scope="session")
def system74():
    return build_coupled_system(CircuitParams.reference_device(74.0, 0.010))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, filled by the ``acceptance`` fixture
_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criterion (slow)")
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """Record ``(number, title, details)`` for the terminal summary of an acceptance test."""
    store = request.config.stash[_ACCEPTANCE]

    def record(number: int, title: str, details: list[str]):
        store[request.node.nodeid] = {"number": number, "title": title, "details": details, "outcome": None}

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    entry = item.config.stash[_ACCEPTANCE].get(item.nodeid)
    if entry is not None and (report.when == "call" or report.failed):
        entry["outcome"] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for entry in sorted(store.values(), key=lambda e: e["number"]):
        outcome = entry["outcome"] or "FAIL"
        terminalreporter.write_line(f"criterion {entry['number']:>2}: {outcome}  {entry['title']}")
        for line in entry["details"]:
            terminalreporter.write_line(f"    {line}")
