import pytest

from effortprop.data import fixture_path
from effortprop.heap import enumerate_paths
from effortprop.ingestion import load_project

# criterion id -> (description, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[str, tuple[str, bool, str]] = {}


@pytest.fixture(scope="session")
def case_study():
    return load_project(fixture_path("highschool"))


@pytest.fixture(scope="session")
def synthetic():
    return load_project(fixture_path("highschool_synthetic"))


@pytest.fixture(scope="session")
def case_paths(case_study):
    return enumerate_paths(case_study.system)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        desc, ok, detail = ACCEPTANCE[cid]
        line = f"{cid:>4} {'PASS' if ok else 'FAIL'}  {desc}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
