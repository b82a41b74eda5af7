import numpy as np
import pytest

from teqkd.physics import DetectorSpec, SourceSpec

OMEGA_0 = 2e15
OMEGA_1 = 999_999_999_950_000.0
OMEGA_2 = 1_000_000_000_050_000.0


@pytest.fixture
def source():
    return SourceSpec(sum_frequency=OMEGA_0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def det(center=OMEGA_0 / 2, bandwidth=1e9, efficiency=1.0):
    return DetectorSpec(center, bandwidth, efficiency)


ACCEPTANCE_LINES: list[str] = []


def report(criterion, ok, detail):
    line = f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
