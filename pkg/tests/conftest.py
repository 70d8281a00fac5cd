import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion reported in the summary")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    store = item.config._criteria
    prev = store.get(n, (title, True, 0.0))
    ok = prev[1] and not rep.failed
    store[n] = (title, ok, prev[2] + rep.duration)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_criteria", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        title, ok, secs = store[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} ({secs:.1f}s)")
