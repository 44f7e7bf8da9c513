import os

import numpy as np
import pytest


def pytest_collection_modifyitems(config, items):
    if os.environ.get("KZ_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="long Monte Carlo run; set KZ_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def complex_normal(rng, n):
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)


_ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance(capsys):
    """Record and print the verdict line of an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"
        _ACCEPTANCE_LINES[number] = line
        with capsys.disabled():
            print(f"\n{line}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 15):
        terminalreporter.write_line(_ACCEPTANCE_LINES.get(number, f"SKIP criterion {number:2d}: not run"))
