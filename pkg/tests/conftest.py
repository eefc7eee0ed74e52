from __future__ import annotations

import pytest

from burgerlab.forcing import ForcingSpec
from burgerlab.torus import make_grid

# filled by test_acceptance.py: criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def spec1() -> ForcingSpec:
    return ForcingSpec.cosine_squared(1)


@pytest.fixture(scope="session")
def grid1024():
    return make_grid(1024)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
