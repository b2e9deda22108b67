import pytest

from fmslab.geometry import saito_scan
from fmslab.models import ModelSpec, TrajectorySpec

# loops used for peak counting: centred on the EP, slow enough to be adiabatic
SAITO_LOOP = TrajectorySpec(radius=0.5, omega=0.1)


@pytest.fixture(scope="session")
def saito_rank1():
    return saito_scan(ModelSpec("RankK", {"k": 1}), SAITO_LOOP)


@pytest.fixture(scope="session")
def saito_rank2():
    return saito_scan(ModelSpec("RankK", {"k": 2}), SAITO_LOOP)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
