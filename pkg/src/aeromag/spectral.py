"""Welch amplitude spectral density and overlapping Allan deviation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, signal


@dataclass(frozen=True)
class SpectralEstimate:
    """``x`` is frequency (Hz) for an ASD or averaging time (s) for an ADEV."""

    x: np.ndarray
    y: np.ndarray
    kind: str  # "asd" or "adev"

    def to_csv(self, path) -> None:
        header = "frequency_hz,asd_nt_per_rthz" if self.kind == "asd" else "tau_s,adev_nt"
        np.savetxt(path, np.column_stack([self.x, self.y]), delimiter=",",
                   header=header, comments="", fmt="%.10g")


def welch_asd(series, f_s: float, segment_length: int | None = None,
              overlap: float = 0.5) -> SpectralEstimate:
    """One-sided ASD from Hann-windowed, averaged periodograms.

    The default segment length gives eight segments at 50 % overlap. White
    noise with ASD ``sigma_w`` estimates to ``sigma_w``.
    """
    x = np.asarray(series, dtype=float)
    if segment_length is None:
        segment_length = max(int(2 * x.size / 9), 2)
    if x.size < 2 * segment_length:
        raise ValueError(
            f"series of length {x.size} is too short for segments of {segment_length}"
        )
    if not 0 <= overlap < 1:
        raise ValueError("overlap must be in [0, 1)")
    f, pxx = signal.welch(x, fs=f_s, window="hann", nperseg=segment_length,
                          noverlap=int(overlap * segment_length), detrend=False,
                          scaling="density", return_onesided=True)
    return SpectralEstimate(f, np.sqrt(pxx), "asd")


def _validated_m(taus, f_s, n):
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    m = np.round(taus * f_s).astype(int)
    if taus.size == 0 or np.any(m < 1) or np.any(np.diff(m) <= 0):
        raise ValueError("taus must be increasing and at least one sample long")
    if np.any(m > n // 3):
        raise ValueError(f"taus must not exceed n/(3 f_s) = {n / (3 * f_s):.3g} s")
    return m


def allan_deviation(series, f_s: float, taus) -> SpectralEstimate:
    """Overlapping Allan deviation of a sampled quantity.

    Each ``tau`` is rounded to a whole number of samples ``m``; the estimate is
    ``sqrt(sum((X[i+2m] - 2 X[i+m] + X[i])^2) / (2 m^2 (N - 2m)))`` on the
    cumulative sum ``X``.
    """
    y = np.asarray(series, dtype=float)
    m = _validated_m(taus, f_s, y.size)
    X = np.concatenate([[0.0], np.cumsum(y)])
    N = X.size
    adev = np.empty(m.size)
    for k, mk in enumerate(m):
        d = X[2 * mk:] - 2.0 * X[mk:N - mk] + X[:N - 2 * mk]
        adev[k] = np.sqrt(np.sum(d * d) / (2.0 * mk * mk * (N - 2 * mk)))
    return SpectralEstimate(m / f_s, adev, "adev")


def log_taus(f_s: float, n: int, per_decade: int = 8, tau_min: float | None = None,
             tau_max: float | None = None) -> np.ndarray:
    """Log-spaced averaging times, unique in whole samples."""
    tau_min = 1.0 / f_s if tau_min is None else tau_min
    tau_max = n / (3.0 * f_s) if tau_max is None else tau_max
    decades = np.log10(tau_max / tau_min)
    m = np.unique(np.round(np.logspace(np.log10(tau_min * f_s), np.log10(tau_max * f_s),
                                       int(decades * per_decade) + 1)).astype(int))
    return m[m >= 1] / f_s


def allan_deviation_from_asd(asd, f_s: float, taus, f_min: float = 0.0) -> np.ndarray:
    """Allan deviation implied by a one-sided ASD model, by quadrature.

    ``sigma^2(tau) = 2 int S(f)^2 sin^4(pi f tau) / (pi f tau)^2 df`` over
    ``(f_min, f_s/2]``; ``asd`` is a callable of frequency.
    """
    out = []
    for tau in np.atleast_1d(taus):
        def integrand(logf):
            f = np.exp(logf)
            x = np.pi * f * tau
            return 2.0 * asd(f) ** 2 * np.sin(x) ** 4 / x ** 2 * f

        lo = np.log(max(f_min, 1e-9))
        hi = np.log(f_s / 2.0)
        pts = np.linspace(lo, hi, 20001)
        out.append(np.sqrt(integrate.trapezoid(integrand(pts), pts)))
    return np.array(out)
