import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """record(n, ok, detail) logs a criterion line; the test then asserts ok."""
    def record(n, ok, detail=""):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[n] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
            terminalreporter.write_line(ACCEPTANCE[n])
