import pytest

_RESULTS: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, text = marker.args
    elapsed = getattr(item, "elapsed", None)
    prev = _RESULTS.get(number)
    if prev is None or prev[0]:
        _RESULTS[number] = (rep.passed, text, elapsed)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, text, elapsed = _RESULTS[number]
        took = f" [{elapsed:.2f}s]" if elapsed is not None else ""
        terminalreporter.write_line(f"AC{number:<2} {'PASS' if ok else 'FAIL'} {text}{took}")


@pytest.fixture
def stopwatch(request):
    """Times the block given to it and stores the result for the summary."""
    import time

    class Watch:
        def __enter__(self):
            self.start = time.perf_counter()
            return self

        def __exit__(self, *exc):
            self.elapsed = time.perf_counter() - self.start
            request.node.elapsed = self.elapsed

    return Watch()
