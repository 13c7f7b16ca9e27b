import pytest

from qudit_blind.galois import make_field

# criterion number -> (passed, one-line detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def acceptance():
    return ACCEPTANCE


@pytest.fixture(params=[(2, 1), (3, 1), (2, 2), (5, 1)], ids=lambda pm: f"GF{pm[0]**pm[1]}")
def small_field(request):
    return make_field(*request.param)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
