import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for the acceptance summary; returns ``passed``."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def _report(name, passed, detail=""):
        lines.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}".rstrip(": "))
        return passed

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
