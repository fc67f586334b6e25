from pathlib import Path

import pytest

from draws import BASELINE_TRIPLES, baseline_scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

ACCEPTANCE_LINES = []


@pytest.fixture
def scenario_dir():
    return SCENARIOS


@pytest.fixture(params=sorted(BASELINE_TRIPLES))
def baseline(request):
    return baseline_scenario(*BASELINE_TRIPLES[request.param])


@pytest.fixture
def record_criterion():
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
