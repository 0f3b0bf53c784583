import numpy as np
import pytest

from aeromag.flight import (background_along, background_field, gen_calibration_trajectory,
                            gen_validation_trajectory, simulate_onboard)
from aeromag.tolles_lawson import generate_scenario_coefficients


@pytest.fixture(scope="session")
def Be_e():
    return background_field()


@pytest.fixture(scope="session")
def cal_traj():
    return gen_calibration_trajectory(seed=0)


@pytest.fixture(scope="session")
def val_traj():
    return gen_validation_trajectory(seed=1000)


@pytest.fixture(scope="session")
def random_coeffs(cal_traj, Be_e):
    Be_b, dBe_b = background_along(cal_traj, Be_e)
    return generate_scenario_coefficients("random", 0, Be_b, dBe_b)


@pytest.fixture(scope="session")
def stress_coeffs(cal_traj, Be_e):
    Be_b, dBe_b = background_along(cal_traj, Be_e)
    return generate_scenario_coefficients("perpendicular-stress", 0, Be_b, dBe_b)


@pytest.fixture(scope="session")
def random_signals(cal_traj, val_traj, Be_e, random_coeffs):
    cal = simulate_onboard(cal_traj, Be_e, random_coeffs, seed=10)
    val = simulate_onboard(val_traj, Be_e, random_coeffs, seed=11)
    return cal, val


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_report():
    """Criterion number -> one-line verdict, printed in the terminal summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[key])
