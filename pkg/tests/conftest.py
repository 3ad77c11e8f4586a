from pathlib import Path

import pytest

from cruisesafe.funcmodel import load_model
from cruisesafe.hara import load_hara
from cruisesafe.safemon import load_table

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "cruisesafe" / "fixtures"
DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def cc_model():
    return load_model(FIXTURES / "cruise_control.model")


@pytest.fixture(scope="session")
def cc_hara():
    return load_hara(FIXTURES / "cc_hara.model")


@pytest.fixture(scope="session")
def monitor_table():
    return load_table(FIXTURES / "monitor_table.json")


# one summary line per acceptance criterion; parametrized cases fold into their criterion
_acceptance: dict[str, str] = {}


def _criterion(nodeid: str) -> str:
    name = nodeid.split("::")[-1].split("[")[0]
    parts = name.split("_")
    return f"criterion {parts[2]} ({' '.join(parts[3:])})" if name.startswith("test_criterion_") else name


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    key = _criterion(report.nodeid)
    if report.when == "call":
        if _acceptance.get(key) != "FAIL":
            _acceptance[key] = "PASS" if report.passed else "FAIL"
    elif report.failed:
        _acceptance[key] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _acceptance.items():
        terminalreporter.write_line(f"{status}  {name}")
