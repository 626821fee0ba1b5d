import re

import pytest

from pachain.experiments import ExperimentConfig, run_optimizations, run_scenarios


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def scenario_record(default_config):
    """Both bracketing scenarios at the default configuration."""
    return run_scenarios(default_config)


@pytest.fixture(scope="session")
def optimization_record(default_config):
    """Full optimization study at the default configuration (slow; shared)."""
    return run_optimizations(default_config)


_CRITERION = re.compile(r"test_criterion_(\d+)")

_STATUS = {
    "passed": "PASS",
    "failed": "FAIL",
    "error": "ERROR",
    "xfailed": "FAIL (expected; see docstring and notes)",
    "xpassed": "PASS (unexpected)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = {}
    for category, label in _STATUS.items():
        for report in terminalreporter.stats.get(category, []):
            if category in ("passed", "failed") and getattr(report, "when", "call") != "call":
                continue
            match = _CRITERION.search(getattr(report, "nodeid", ""))
            if match:
                lines[int(match.group(1))] = label
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(f"criterion {number:2d}: {lines[number]}")
