import contextlib

import pytest
from hypothesis import HealthCheck, settings

# Container filesystems make the default deadline flaky; examples stay modest
# so the full suite remains fast.
settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


# One line per acceptance criterion, printed after the run so the outcome of
# each headline check is visible in the terminal output at a glance.
_acceptance_lines: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record a named pass/fail line for the end-of-run summary.

    Usage: `with criterion("name") as c: ...; c.detail = "..."`.  An exception
    inside the block records FAIL and propagates to fail the test as usual.
    """
    @contextlib.contextmanager
    def _record(name):
        class _C:
            detail = ""

        c = _C()
        try:
            yield c
        except BaseException as exc:
            _acceptance_lines.append((name, False, f"{type(exc).__name__}: {exc}"))
            raise
        _acceptance_lines.append((name, True, c.detail))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _acceptance_lines:
        mark = "PASS" if ok else "FAIL"
        line = f"{mark}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def fake_clock():
    """Controllable wall clock for auth/session tests."""
    class Clock:
        def __init__(self):
            self.now = 1_000_000.0

        def __call__(self):
            return self.now

        def advance(self, s):
            self.now += s

    return Clock()
