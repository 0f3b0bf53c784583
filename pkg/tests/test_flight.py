from dataclasses import replace

import numpy as np
import pytest

from aeromag.flight import (CalibrationFlightConfig, GyroErrorParams, TrajectoryConfigError,
                            ValidationFlightConfig, background_along, background_field,
                            count_excitations, gen_calibration_trajectory,
                            gen_validation_trajectory, gyro_attitude_error, sensor_temperature,
                            signals_to_csv, simulate_onboard, trajectory_from_csv,
                            trajectory_to_csv, with_altitude)
from aeromag.tolles_lawson import TlCoefficients


def test_calibration_duration_and_sampling(cal_traj):
    assert 640 <= cal_traj.duration <= 680
    assert len(cal_traj) == round(cal_traj.duration * 20)
    assert np.allclose(np.diff(cal_traj.t), 0.05)


@pytest.mark.parametrize("seed", range(5))
def test_calibration_envelope_and_excitations(seed):
    traj = gen_calibration_trajectory(seed=seed)
    roll, pitch = np.degrees(traj.attitude[:, 0]), np.degrees(traj.attitude[:, 1])
    assert roll.min() >= -55 and roll.max() <= 15
    assert pitch.min() >= -10 and pitch.max() <= 10
    assert 36 <= count_excitations(traj) <= 44


def test_calibration_deterministic():
    a, b = gen_calibration_trajectory(seed=4), gen_calibration_trajectory(seed=4)
    assert np.array_equal(a.attitude, b.attitude)
    assert not np.array_equal(a.attitude, gen_calibration_trajectory(seed=5).attitude)


@pytest.mark.parametrize("cfg", [
    CalibrationFlightConfig(roll_amplitude_deg=(5.0, 20.0)),
    CalibrationFlightConfig(turn_bank_deg=(45.0, 60.0)),
    CalibrationFlightConfig(pitch_amplitude_deg=(3.0, 12.0)),
    CalibrationFlightConfig(lap_time=60.0),
    CalibrationFlightConfig(burst_pattern=("yaw",)),
])
def test_calibration_config_errors(cfg):
    with pytest.raises(TrajectoryConfigError):
        gen_calibration_trajectory(cfg)


def test_validation_trajectory(val_traj):
    assert 3400 <= val_traj.duration <= 3560
    turning = np.abs(val_traj.rates[:, 2]) > 1e-6
    assert np.degrees(np.std(val_traj.attitude[~turning, 0])) < 2.0
    assert np.array_equal(gen_validation_trajectory(seed=1000).attitude, val_traj.attitude)
    with pytest.raises(TrajectoryConfigError):
        gen_validation_trajectory(ValidationFlightConfig(duration=300.0))


def test_temperature_constant_altitude():
    T = sensor_temperature(np.full(1000, 300.0), 20.0)
    assert np.allclose(T, 20 - 0.0065 * 300)


def test_temperature_step_response():
    fs, tau = 20.0, 300.0
    h = np.full(20000, 300.0)
    h[1:] = 800.0
    T = sensor_temperature(h, fs, tau)
    amb = 20 - 0.0065 * 800.0
    dT_amb = -0.0065 * 500.0
    t = np.arange(h.size) / fs
    assert np.allclose(T[1:] - amb, -dT_amb * np.exp(-t[1:] / tau), atol=1e-12)


def test_temperature_zero_lag_tracks_ambient():
    h = np.linspace(0, 1000, 50)
    assert np.array_equal(sensor_temperature(h, 20.0, tau=0.0), 20 - 0.0065 * h)


def test_gyro_zero():
    err = gyro_attitude_error(GyroErrorParams(0.0, 0.0), 500, 20.0, 1)
    assert np.array_equal(err, np.zeros((500, 3)))


def test_gyro_arw_variance_law():
    p = GyroErrorParams(bias_sigma=0.0)
    fs, t_end = 20.0, 600.0
    n = int(t_end * fs) + 1
    finals = np.concatenate([gyro_attitude_error(p, n, fs, s)[-1] for s in range(1000)])
    assert np.std(finals) == pytest.approx(p.arw * np.sqrt(t_end), rel=0.10)


def test_gyro_default_drift_range():
    peaks = [np.abs(gyro_attitude_error(GyroErrorParams(), 13200, 20.0, s)).max() for s in range(200)]
    assert np.quantile(np.degrees(peaks), 0.95) < 0.3


def test_gyro_requires_samples():
    with pytest.raises(ValueError):
        gyro_attitude_error(GyroErrorParams(), 0, 20.0, 0)


def test_signal_invariants(cal_traj, random_signals):
    sig = random_signals[0]
    assert np.array_equal(sig.Bt_b, sig.Be_b + sig.Ba_b)
    assert np.allclose(sig.Bt, np.linalg.norm(sig.Bt_b, axis=1), rtol=0, atol=0)
    assert np.allclose(np.linalg.norm(sig.Be_b, axis=1), 50000.0, rtol=1e-12)
    R = sig.R_hat_eb
    assert np.allclose(R @ R.transpose(0, 2, 1), np.eye(3), atol=1e-12)
    assert np.allclose(np.linalg.det(R), 1.0)


def test_signals_deterministic(cal_traj, Be_e, random_coeffs, random_signals):
    again = simulate_onboard(cal_traj, Be_e, random_coeffs, seed=10)
    for name in ("Bt_b", "T_sensor", "R_hat_eb", "attitude_error"):
        assert np.array_equal(getattr(again, name), getattr(random_signals[0], name))


def test_dbe_matches_finite_difference(cal_traj, Be_e):
    Be_b, dBe_b = background_along(cal_traj, Be_e)
    # a 3-point stencil at 20 Hz carries ~30 nT/s truncation error inside the
    # 5.5 s bursts, so compare against a fourth-order stencil
    h = 1.0 / cal_traj.fs
    fd = (-Be_b[4:] + 8 * Be_b[3:-1] - 8 * Be_b[1:-3] + Be_b[:-4]) / (12 * h)
    t = cal_traj.t[2:-2]
    turning = np.abs(cal_traj.rates[:, 2]) > 0
    onsets = list(cal_traj.t[np.flatnonzero(np.diff(turning.astype(int)))])
    onsets += [b.start for b in cal_traj.bursts] + [b.start + b.period for b in cal_traj.bursts]
    away = np.all(np.abs(t[:, None] - np.array(onsets)[None, :]) >= 0.5, axis=1)
    assert away.mean() > 0.8
    assert np.max(np.abs(fd - dBe_b[2:-2])[away]) < 0.5


def test_level_flight_zero_coefficients(Be_e):
    traj = gen_validation_trajectory(ValidationFlightConfig(lines=1, duration=60.0,
                                                            wander_roll_deg=0.0, wander_pitch_deg=0.0))
    sig = simulate_onboard(traj, Be_e, TlCoefficients.zeros(), seed=0)
    assert np.allclose(sig.Bt_b, Be_e, atol=1e-9)


def test_total_field_yaw_invariance():
    traj = gen_calibration_trajectory(seed=2)
    level = replace(traj, attitude=traj.attitude * [0, 0, 1], rates=traj.rates * [0, 0, 1])
    coeffs = TlCoefficients(np.zeros(3), 0.01 * np.eye(3), np.zeros((3, 3)))
    Be_e = background_field(inclination_deg=90.0)
    sig = simulate_onboard(level, Be_e, coeffs, gyro=None)
    assert np.ptp(sig.Bt) < 1e-9


def test_trajectory_csv_round_trip(tmp_path, cal_traj):
    path = tmp_path / "traj.csv"
    trajectory_to_csv(cal_traj, path)
    back = trajectory_from_csv(path)
    assert back.fs == pytest.approx(cal_traj.fs)
    assert np.allclose(back.attitude, cal_traj.attitude, atol=1e-10)
    assert np.allclose(back.rates, cal_traj.rates, atol=1e-10)
    assert np.allclose(back.altitude, cal_traj.altitude)


def test_trajectory_csv_minimal_columns(tmp_path):
    t = np.arange(200) / 20.0
    rows = np.column_stack([t, 0.1 * np.sin(t), np.zeros_like(t), 0.01 * t, np.full_like(t, 300.0)])
    path = tmp_path / "min.csv"
    np.savetxt(path, rows, delimiter=",", header="t,roll,pitch,yaw,altitude", comments="")
    traj = trajectory_from_csv(path)
    assert np.allclose(traj.rates[5:-5, 0], 0.1 * np.cos(t[5:-5]), atol=1e-3)
    assert traj.position[-1, 0] > 0
    bad = tmp_path / "bad.csv"
    np.savetxt(bad, rows[:, :3], delimiter=",", header="t,roll,pitch", comments="")
    with pytest.raises(ValueError):
        trajectory_from_csv(bad)


def test_signals_csv(tmp_path, random_signals):
    path = tmp_path / "sig.csv"
    signals_to_csv(random_signals[0], path)
    header = path.read_text().split("\n", 1)[0].split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (len(random_signals[0]), len(header))
    assert np.allclose(data[:, header.index("Bt")], random_signals[0].Bt)


def test_with_altitude(cal_traj):
    traj = with_altitude(cal_traj, 500.0)
    assert np.all(traj.altitude == 500.0) and np.all(traj.position[:, 2] == -500.0)
    assert np.array_equal(traj.attitude, cal_traj.attitude)
