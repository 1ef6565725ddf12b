import pytest

from tempered_spectra import fixtures as fx
from tempered_spectra.orbit import enumerate_ball

_ACCEPTANCE: list = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): acceptance criterion number")


@pytest.fixture
def record_acceptance():
    """Record a pass/fail line for the terminal summary."""

    def record(criterion: int, passed: bool, detail: str, seconds: float):
        _ACCEPTANCE.append((criterion, passed, detail, seconds))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail, secs in sorted(_ACCEPTANCE):
        terminalreporter.write_line(
            f"criterion {n}: {'PASS' if ok else 'FAIL'} ({secs:.2f} s) {detail}")


@pytest.fixture(scope="session")
def cyclic_ball():
    return enumerate_ball(fx.cyclic(1.0), 200)


@pytest.fixture(scope="session")
def schottky4_ball():
    return enumerate_ball(fx.schottky(4.0), 7)


@pytest.fixture(scope="session")
def schottky5_ball():
    return enumerate_ball(fx.schottky(5.0, ("c", "d")), 7)


@pytest.fixture(scope="session")
def small_self_joining():
    return enumerate_ball(fx.self_joining(4.0), 8)


@pytest.fixture(scope="session")
def product_ball():
    return enumerate_ball(fx.product(4.0, 5.0), 7)


@pytest.fixture(scope="session")
def small_product():
    return enumerate_ball(fx.product(4.0, 5.0), 3)
