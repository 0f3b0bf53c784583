import numpy as np
import pytest
from scipy import integrate, signal

from aeromag.spectral import (SpectralEstimate, allan_deviation, allan_deviation_from_asd,
                              log_taus, welch_asd)


def loglog_slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


def test_white_noise_median_asd():
    fs, sigma = 100.0, 0.02
    rng = np.random.default_rng(0)
    x = rng.standard_normal(2 ** 18) * sigma * np.sqrt(fs / 2)
    est = welch_asd(x, fs)
    assert est.kind == "asd"
    assert abs(np.median(est.y[1:-1]) / sigma - 1) < 0.10


def test_zero_series_gives_zero_asd():
    est = welch_asd(np.zeros(4096), 10.0)
    assert np.all(est.y == 0)


def test_sine_peak_matches_window_response():
    fs, nseg, amp = 64.0, 1024, 3.0
    k = 40
    t = np.arange(8 * nseg) / fs
    x = amp * np.sin(2 * np.pi * k * fs / nseg * t)
    est = welch_asd(x, fs, segment_length=nseg)
    w = signal.get_window("hann", nseg)
    # bin-centred sine: |sum w x e|^2 = (A sum(w) / 2)^2, density scaling 1/(fs sum w^2), one-sided x2
    expected = amp * np.sqrt(0.5 * w.sum() ** 2 / (fs * (w ** 2).sum()))
    assert np.argmax(est.y) == k
    assert est.y[k] == pytest.approx(expected, rel=1e-6)
    assert expected == pytest.approx(amp * np.sqrt(nseg / fs / 3), rel=1e-3)


@pytest.mark.parametrize("kind", ["white", "colored"])
def test_parseval(kind):
    fs = 50.0
    rng = np.random.default_rng(3)
    x = rng.standard_normal(2 ** 17)
    if kind == "colored":
        x = signal.lfilter([1.0], [1.0, -0.9], x)
    est = welch_asd(x, fs)
    power = integrate.trapezoid(est.y ** 2, est.x)
    assert power == pytest.approx(np.var(x), rel=0.05)


def test_welch_errors():
    with pytest.raises(ValueError):
        welch_asd(np.zeros(100), 10.0, segment_length=60)
    with pytest.raises(ValueError):
        welch_asd(np.zeros(1000), 10.0, segment_length=100, overlap=1.0)


def test_constant_series_zero_adev():
    est = allan_deviation(np.full(1000, 7.0), 10.0, [0.1, 1.0, 10.0])
    assert est.kind == "adev"
    assert np.allclose(est.y, 0, atol=1e-12)


def test_white_noise_adev_slope_and_level():
    fs, sigma = 10.0, 0.05
    rng = np.random.default_rng(1)
    x = rng.standard_normal(2 ** 18) * sigma * np.sqrt(fs / 2)
    taus = np.logspace(0, 1, 9)
    est = allan_deviation(x, fs, taus)
    assert abs(loglog_slope(est.x, est.y) + 0.5) < 0.05
    # white FM: ADEV = sigma_w / sqrt(2 tau) for one-sided ASD sigma_w
    assert np.allclose(est.y, sigma / np.sqrt(2 * est.x), rtol=0.1)


def test_random_walk_adev_slope():
    fs = 10.0
    rng = np.random.default_rng(2)
    x = np.cumsum(rng.standard_normal(2 ** 18))
    est = allan_deviation(x, fs, np.logspace(1, 2, 9))
    assert abs(loglog_slope(est.x, est.y) - 0.5) < 0.1


def test_linear_drift_exact():
    fs, a = 20.0, 0.37
    t = np.arange(3000) / fs
    taus = np.array([0.05, 0.5, 5.0, 50.0])
    est = allan_deviation(a * t + 4.0, fs, taus)
    assert np.allclose(est.y, a * taus / np.sqrt(2), rtol=1e-9)


def test_adev_tau_grid_errors():
    x = np.zeros(300)
    with pytest.raises(ValueError):
        allan_deviation(x, 10.0, [11.0])
    with pytest.raises(ValueError):
        allan_deviation(x, 10.0, [1.0, 0.5])
    with pytest.raises(ValueError):
        allan_deviation(x, 10.0, [0.01])
    with pytest.raises(ValueError):
        allan_deviation(x, 10.0, [])


def test_log_taus_grid():
    taus = log_taus(10.0, 30000, per_decade=5)
    m = taus * 10.0
    assert np.allclose(m, np.round(m))
    assert np.all(np.diff(taus) > 0)
    assert taus[0] == pytest.approx(0.1) and taus[-1] <= 1000.0
    allan_deviation(np.zeros(30000), 10.0, taus)


def test_adev_from_white_asd():
    sigma, fs = 0.1, 1000.0
    taus = np.array([0.1, 1.0])
    pred = allan_deviation_from_asd(lambda f: np.full_like(f, sigma), fs, taus)
    assert np.allclose(pred, sigma / np.sqrt(2 * taus), rtol=0.02)


def test_csv_export(tmp_path):
    est = SpectralEstimate(np.array([0.1, 1.0]), np.array([2.0, 3.0]), "asd")
    est.to_csv(tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "frequency_hz,asd_nt_per_rthz"
    assert np.allclose(np.loadtxt(tmp_path / "a.csv", delimiter=",", skiprows=1), [[0.1, 2.0], [1.0, 3.0]])
    SpectralEstimate(np.array([1.0]), np.array([2.0]), "adev").to_csv(tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text().startswith("tau_s,adev_nt")
