import pytest

from bubblequad.geometry import THREE_BALLS, Ball, MultiBubble
from bubblequad.lowdisc import sample_surface, sample_volume

# (number, name, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] criterion {num:2d}: {name} -- {detail}")


@pytest.fixture
def criterion():
    def record(num, name, passed, detail=""):
        ACCEPTANCE_RESULTS.append((num, name, bool(passed), detail))
        return passed

    return record


@pytest.fixture(scope="session")
def unit_ball():
    return MultiBubble((Ball((0.0, 0.0, 0.0), 1.0),))


@pytest.fixture(scope="session")
def three_balls():
    return THREE_BALLS


@pytest.fixture(scope="session")
def three_ball_volume_small():
    return sample_volume(THREE_BALLS, 20_000)


@pytest.fixture(scope="session")
def unit_sphere_surface(unit_ball):
    return sample_surface(unit_ball, 2_000)
