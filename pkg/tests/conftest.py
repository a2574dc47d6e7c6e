import contextlib

import pytest


def _lines(config) -> list:
    if not hasattr(config, "_acceptance_lines"):
        config._acceptance_lines = []
    return config._acceptance_lines


@pytest.fixture
def criterion(request):
    """Context manager recording one pass/fail summary line per criterion."""

    @contextlib.contextmanager
    def _record(num, title):
        lines = _lines(request.config)
        try:
            yield
        except BaseException:
            lines.append(f"FAIL  criterion {num}: {title}")
            raise
        lines.append(f"PASS  criterion {num}: {title}")

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = _lines(config)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
