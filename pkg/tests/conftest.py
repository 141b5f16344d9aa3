import pytest

from fracfreq import FractionalTF, PilDController, compose_open_loop

# plant 1 / (0.8 s^2.2 + 0.5 s^0.9 + 1) and controller 50 + 5.326 s^1.286
PLANT_NUM = [(1.0, 0.0)]
PLANT_DEN = [(0.8, 2.2), (0.5, 0.9), (1.0, 0.0)]
PD_NUM = [(50.0, 0.0), (5.326, 1.286)]


@pytest.fixture
def plant():
    return FractionalTF(PLANT_NUM, PLANT_DEN)


@pytest.fixture
def pd_controller():
    return PilDController(K=50.0, Ti=0.0, Td=5.326, lam=1.0, delta=1.286)


@pytest.fixture
def open_loop(plant, pd_controller):
    return compose_open_loop(pd_controller, plant)


_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line("%-4s %s" % ("PASS" if outcome == "passed" else "FAIL", name))
