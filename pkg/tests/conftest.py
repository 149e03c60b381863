import pytest

from gbvlab.experiment import run_equivalence_suite

SUITE_BETAS = (1.5, 2.0, 3.0)
SUITE_DEGREES = (2, 4, 8, 16, 32, 64)


def suite_family_specs():
    specs = []
    for b in SUITE_BETAS:
        specs += [f"power_cosine({b})", f"power_sine({b})", f"log_power_sine({b}, 0.5)",
                  f"complex_sector({b}, pi/6)"]
    return specs


_ACCEPTANCE = {}


@pytest.fixture
def record_acceptance():
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, ok, detail=""):
        _ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")

    return record


@pytest.fixture(scope="session")
def equivalence_suite():
    return run_equivalence_suite(suite_family_specs(), list(SUITE_DEGREES))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
