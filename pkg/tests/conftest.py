import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ftmkit.channel import generate_dataset, load_preset  # noqa: E402

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture(scope="session")
def indoor_dataset():
    return generate_dataset(load_preset("indoor", seed=11))


@pytest.fixture(scope="session")
def outdoor_dataset():
    return generate_dataset(load_preset("outdoor-40", seed=11))


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _ACCEPTANCE.append((outcome, props["criterion"], props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for outcome, name, measured in _ACCEPTANCE:
        terminalreporter.write_line(f"{outcome:4s}  {name}" + (f"  [{measured}]" if measured else ""))
