import collections

import pytest

_results: dict[int, list[bool]] = collections.defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    _results[marker.args[0]].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        ok = all(_results[k])
        n = len(_results[k])
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} ({sum(_results[k])}/{n} checks)")


@pytest.fixture(scope="session")
def rng():
    import numpy as np

    return np.random.default_rng(20240611)
