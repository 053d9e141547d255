"""Shared fixtures and the acceptance-criteria summary printer.

Tests marked with @pytest.mark.criterion("...") get one PASS/FAIL line in a
dedicated terminal section at the end of the run, so the acceptance gate is
readable at a glance.
"""

from __future__ import annotations

import pytest

from codebeam import IOPair, Problem, load_profiles

_criterion_results: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): names an acceptance criterion this test enforces"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "setup" and report.skipped:
        _criterion_results[name] = "SKIP"
    elif report.when == "call":
        _criterion_results[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _criterion_results.items():
        terminalreporter.write_line(f"[{status}] {name}")


@pytest.fixture(scope="session")
def profiles():
    return load_profiles()


@pytest.fixture(scope="session")
def py_profile(profiles):
    return profiles["python"]


@pytest.fixture(scope="session")
def cpp_profile(profiles):
    return profiles["cpp"]


def make_pair(input_lines, output_lines) -> IOPair:
    return IOPair(tuple(input_lines), tuple(output_lines))


def _as_pairs(pairs) -> tuple[IOPair, ...]:
    return tuple(
        p if isinstance(p, IOPair) else make_pair(p[0], p[1]) for p in pairs
    )


def make_problem(
    problem_id="demo",
    description="Read every line and print it back unchanged",
    prompt=(((["1"]), ["1"]),),
    validation=((["2"], ["2"]),),
    test=(),
) -> Problem:
    return Problem(
        id=problem_id,
        description=description,
        prompt_set=_as_pairs(prompt),
        validation_set=_as_pairs(validation),
        test_set=_as_pairs(test),
    )
