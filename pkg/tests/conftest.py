import pytest

from dhls.analysis import sweep
from dhls.lattice import ProblemParams
from dhls.solver import SolverConfig

ACCEPTANCE = []


@pytest.fixture(scope="session")
def supercritical_params():
    return ProblemParams(1, 1.25, 1.25, 0.5)


@pytest.fixture(scope="session")
def sweep40(supercritical_params):
    """The n=1, (r, s, alpha) = (1.25, 1.25, 0.5) sweep over N = 1..40."""
    return sweep(supercritical_params, range(1, 41), SolverConfig(threads=1))


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion, then assert."""

    def record(number, passed, detail):
        ACCEPTANCE.append((number, bool(passed), detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}  {detail}")
