import sys

import pytest


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    verdict = "PASS" if report.passed else "FAIL"
    sys.stderr.write(f"[ACCEPTANCE {verdict}] {name}\n")


@pytest.fixture
def fixed_clock():
    """Deterministic timestamps for digest comparisons."""
    counter = {"n": 0}

    def clock() -> str:
        counter["n"] += 1
        return f"2026-01-01T00:00:{counter['n']:02d}+00:00"

    return clock
