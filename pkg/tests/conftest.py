import pytest

RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record a criterion outcome for the end-of-run acceptance summary."""
    results = request.config.stash.setdefault(RESULTS, {})

    def record(name, ok, detail):
        results[name] = (ok, detail)
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(results.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
