import json
from dataclasses import replace

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from aeromag.calibration import (AttitudeSource, CalibrationOptions, CalibrationResult,
                                 EstimationError, Model, build_be_proxy, calibrate_and_validate,
                                 compensate, filtered_derivative, fit_scalar, fit_vector, lstsq_qr,
                                 residual_to_csv)
from aeromag.flight import ValidationFlightConfig, gen_validation_trajectory, simulate_onboard
from aeromag.magnetometers import SensorOutput, measure_setup
from aeromag.tolles_lawson import TlCoefficients


def ideal(sig):
    return measure_setup("ideal", sig, 0)


def test_derivative_constant_and_ramp():
    fs = 20.0
    assert np.allclose(filtered_derivative(np.full(400, 3.0), fs), 0.0, atol=1e-12)
    t = np.arange(2000) / fs
    d = filtered_derivative(2.5 * t - 1.0, fs)
    assert np.allclose(d[200:-200], 2.5, rtol=0.01)
    assert np.allclose(filtered_derivative(2.5 * t, fs, None), 2.5)


def test_derivative_attenuates_5hz():
    fs = 20.0
    t = np.arange(4000) / fs
    x = np.sin(2 * np.pi * 5 * t)
    raw = np.abs(filtered_derivative(x, fs, None)[200:-200]).max()
    filt = np.abs(filtered_derivative(x, fs, 1.0)[200:-200]).max()
    assert 20 * np.log10(raw / filt) >= 20


def test_derivative_errors():
    with pytest.raises(ValueError):
        filtered_derivative([1.0], 20.0)
    with pytest.raises(ValueError):
        filtered_derivative(np.zeros(100), 20.0, cutoff=15.0)


def test_derivative_vector_series():
    t = np.arange(400) / 20.0
    x = np.column_stack([t, 2 * t, -t])
    assert np.allclose(filtered_derivative(x, 20.0, None), [1.0, 2.0, -1.0])


def test_proxy_sources_match_truth(cal_traj, Be_e):
    sig = simulate_onboard(cal_traj, Be_e, TlCoefficients.zeros(), gyro=None)
    for src in AttitudeSource:
        if src is AttitudeSource.BANDPASS:
            continue
        proxy, valid = build_be_proxy(sig, ideal(sig), src)
        assert np.allclose(proxy, sig.Be_b, atol=1e-8)
        assert valid.all()


def test_proxy_zero_vector_flagged(random_signals):
    sig = random_signals[0]
    meas = ideal(sig)
    vec = meas.vector.copy()
    vec[10] = 0.0
    proxy, valid = build_be_proxy(sig, replace(meas, vector=vec), "vector-magnetometer")
    assert not valid[10] and valid.sum() == len(sig) - 1
    assert np.all(np.isfinite(proxy))


def test_proxy_measured_norm_option(random_signals):
    sig = random_signals[0]
    meas = ideal(sig)
    proxy, _ = build_be_proxy(sig, meas, "ins", CalibrationOptions(regressor_norm="measured"))
    assert np.allclose(np.linalg.norm(proxy, axis=1), meas.scalar)


def test_bandpass_rejected(random_signals):
    sig = random_signals[0]
    with pytest.raises(ValueError, match="out of scope"):
        fit_scalar(sig, ideal(sig), "bandpass")


def test_scalar_ideal_perfect(random_signals):
    cal, val = random_signals
    res = calibrate_and_validate("scalar-1d", "perfect", cal, ideal(cal), val, ideal(val))
    assert res.coefficients.shape == (18,)
    assert res.validation.mean < 1e-3
    assert not res.ill_conditioned


def test_vector_exact_recovery(random_signals, random_coeffs):
    cal, val = random_signals
    res = calibrate_and_validate("vector-3d", "perfect", cal, ideal(cal), val, ideal(val))
    truth = random_coeffs.vector_coefficients()
    assert np.max(np.abs(res.coefficients - truth)) / np.max(np.abs(truth)) < 1e-6
    assert res.validation.mean < 1e-6
    back = res.tl_coefficients()
    assert np.allclose(back.N, random_coeffs.N)


def test_scalar_result_has_no_full_coefficients(random_signals):
    cal = random_signals[0]
    with pytest.raises(ValueError):
        fit_scalar(cal, ideal(cal), "perfect").tl_coefficients()


def tilted(sig, alpha_deg, axis=(1.0, 1.0, 0.0)):
    rot = Rotation.from_rotvec(np.radians(alpha_deg) * np.asarray(axis) / np.linalg.norm(axis))
    return replace(sig, R_hat_eb=sig.R_eb @ rot.as_matrix())


def test_scalar_more_robust_to_attitude_error(random_signals):
    cal, val = (tilted(s, 0.1) for s in random_signals)
    s1 = calibrate_and_validate("scalar-1d", "ins", cal, ideal(cal), val, ideal(val))
    s3 = calibrate_and_validate("vector-3d", "ins", cal, ideal(cal), val, ideal(val))
    assert s1.validation.mean * 10 < s3.validation.mean


def truth_result(model, coeffs, src="perfect"):
    x = coeffs.scalar_coefficients() if model is Model.SCALAR else coeffs.vector_coefficients()
    return CalibrationResult(model, AttitudeSource(src), x, 1.0, False, 0)


def test_truth_coefficients_residuals(random_signals, random_coeffs):
    sig = random_signals[1]
    _, r3, _ = compensate(sig, ideal(sig), truth_result(Model.VECTOR, random_coeffs))
    assert np.max(r3) < 1e-8
    _, r1, _ = compensate(sig, ideal(sig), truth_result(Model.SCALAR, random_coeffs))
    Ba = np.linalg.norm(sig.Ba_b, axis=1)
    cos = np.einsum("ij,ij->i", sig.Ba_b, sig.Be_b) / (Ba * 50000.0)
    bound = Ba ** 2 * (1 - cos ** 2) / (2 * 50000.0) + Ba ** 3 / 50000.0 ** 2
    assert np.all(r1 <= bound + 1e-9)


def test_residual_floor_white_noise(random_signals, random_coeffs):
    sig = random_signals[1]
    sigma = 1.0
    meas = ideal(sig)
    noisy = replace(meas, scalar=meas.scalar + sigma * np.random.default_rng(7).standard_normal(len(sig)))
    _, _, stats = compensate(sig, noisy, truth_result(Model.SCALAR, random_coeffs))
    assert stats.mean == pytest.approx(sigma * np.sqrt(2 / np.pi), rel=0.25)


def test_zero_platform_zero_fit(cal_traj, Be_e):
    sig = simulate_onboard(cal_traj, Be_e, TlCoefficients.zeros(), gyro=None)
    meas = ideal(sig)
    noise = 0.05 * np.random.default_rng(1).standard_normal(len(sig))
    _, r, _ = compensate(sig, replace(meas, scalar=meas.scalar + noise),
                         truth_result(Model.SCALAR, TlCoefficients.zeros()))
    assert np.allclose(r, np.abs(noise), atol=1e-9)


def test_compensate_mismatch(random_signals, random_coeffs):
    sig = random_signals[0]
    bad = truth_result(Model.SCALAR, random_coeffs)
    bad.model = Model.VECTOR
    with pytest.raises(ValueError):
        compensate(sig, ideal(sig), bad)


def test_rank_deficient_raises(Be_e, random_coeffs):
    traj = gen_validation_trajectory(ValidationFlightConfig(lines=1, duration=30.0,
                                                            wander_roll_deg=0.0, wander_pitch_deg=0.0))
    sig = simulate_onboard(traj, Be_e, random_coeffs, gyro=None)
    with pytest.raises(EstimationError) as exc:
        fit_vector(sig, ideal(sig), "perfect")
    assert exc.value.condition_number > 1e12
    with pytest.raises(EstimationError):
        fit_scalar(sig, ideal(sig), "perfect")


def test_lstsq_qr():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((50, 4)) * [1, 1e3, 1e-3, 1]
    x = np.array([1.0, -2.0, 3.0, 0.5])
    sol, cond = lstsq_qr(A, A @ x)
    assert np.allclose(sol, x) and cond < 10
    with pytest.raises(EstimationError):
        lstsq_qr(A[:3], (A @ x)[:3])
    A[:, 2] = 0
    with pytest.raises(EstimationError):
        lstsq_qr(A, A @ x)


def test_invalid_samples_dropped(random_signals):
    cal = random_signals[0]
    meas = ideal(cal)
    valid = np.ones(len(cal), dtype=bool)
    valid[100:200] = False
    scalar = meas.scalar.copy()
    scalar[100:200] += 1e4
    res = fit_scalar(cal, SensorOutput(meas.vector, scalar, valid), "perfect")
    assert res.dropped_samples == 100
    assert res.calibration.count == len(cal) - 100
    clean = fit_scalar(cal, meas, "perfect")
    assert np.allclose(res.coefficients, clean.coefficients, rtol=0.05, atol=1e-6)
    assert res.calibration.mean < 2 * clean.calibration.mean


def test_result_json(random_signals, tmp_path):
    cal, val = random_signals
    res = calibrate_and_validate("scalar-1d", "ins", cal, ideal(cal), val, ideal(val))
    obj = json.loads(json.dumps(res.to_json()))
    assert obj["model"] == "scalar-1d" and obj["source"] == "ins"
    assert len(obj["coefficients"]) == 18
    assert set(obj["validation"]) == {"mean", "std", "max", "count"}
    _, r, _ = compensate(val, ideal(val), res)
    residual_to_csv(val.t, r, tmp_path / "r.csv")
    data = np.loadtxt(tmp_path / "r.csv", delimiter=",", skiprows=1)
    assert (tmp_path / "r.csv").read_text().startswith("t,residual_nt,valid")
    assert np.allclose(data[:, 1], r, rtol=1e-9)
