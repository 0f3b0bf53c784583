"""Colored sensor noise synthesis and the two-tap bandwidth filter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseParams:
    """White floor ``sigma_w`` (nT/sqrt(Hz)), 1/f corner ``f_knee`` (Hz), slope ``nu``.

    ``epsilon_f`` regularises the profile at zero frequency; ``None`` means
    half the fundamental frequency of the synthesis window.
    """

    sigma_w: float
    f_knee: float = 0.0
    nu: float = 1.0
    epsilon_f: float | None = None

    def __post_init__(self):
        if not self.sigma_w > 0:
            raise ValueError("sigma_w must be positive")
        if self.f_knee < 0 or self.nu < 0:
            raise ValueError("f_knee and nu must be non-negative")
        if self.epsilon_f is not None and not self.epsilon_f > 0:
            raise ValueError("epsilon_f must be positive")


@dataclass(frozen=True)
class BandwidthParams:
    f_bw: float
    f_s: float

    def __post_init__(self):
        if not (self.f_bw > 0 and self.f_s > 0):
            raise ValueError("f_bw and f_s must be positive")


def target_asd(f, p: NoiseParams, epsilon_f: float | None = None):
    """One-sided amplitude spectral density ``sigma_w ((f_knee/max(f, eps))^(nu/2) + 1)``."""
    eps = epsilon_f if epsilon_f is not None else p.epsilon_f
    if eps is None:
        eps = 1e-6
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequencies must be non-negative")
    if p.f_knee == 0.0:
        return np.full_like(f, p.sigma_w) if f.ndim else p.sigma_w
    colored = (p.f_knee / np.maximum(f, eps)) ** (p.nu / 2.0)
    return p.sigma_w * (colored + 1.0)


def synth_noise(p: NoiseParams, n: int, f_s: float, seed, channels: int | None = None) -> np.ndarray:
    """Real noise series whose one-sided ASD follows :func:`target_asd`.

    A complex standard Gaussian spectrum is scaled bin by bin with
    ``target_asd(f_k) * sqrt(f_s * n / 2)``, the DC bin is zeroed and the
    series is recovered with an inverse real FFT. ``channels`` adds a trailing
    axis of independent series.
    """
    if n < 2:
        raise ValueError("synth_noise needs at least two samples")
    if not f_s > 0:
        raise ValueError("f_s must be positive")
    rng = np.random.default_rng(seed)
    m = 1 if channels is None else channels
    freqs = np.fft.rfftfreq(n, d=1.0 / f_s)
    eps = p.epsilon_f if p.epsilon_f is not None else 0.5 * f_s / n
    amp = target_asd(freqs, p, eps) * np.sqrt(f_s * n / 2.0)
    amp[0] = 0.0

    z = (rng.standard_normal((freqs.size, m)) + 1j * rng.standard_normal((freqs.size, m))) / np.sqrt(2.0)
    if n % 2 == 0:
        # the Nyquist bin of a real series is real
        z[-1] = rng.standard_normal(m)
    x = np.fft.irfft(amp[:, None] * z, n=n, axis=0)
    return x[:, 0] if channels is None else x


def smoothing_beta(b: BandwidthParams) -> float:
    """Filter weight ``1 / (1 + f_s / (2 pi f_bw))``."""
    return 1.0 / (1.0 + b.f_s / (2.0 * np.pi * b.f_bw))


def bandwidth_filter(x, b: BandwidthParams) -> np.ndarray:
    """Two-tap FIR ``y_t = beta x_t + (1 - beta) x_{t-1}`` along axis 0, with ``x_{-1} = x_0``."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] == 0:
        raise ValueError("bandwidth_filter needs a non-empty series")
    beta = smoothing_beta(b)
    prev = np.concatenate([x[:1], x[:-1]], axis=0)
    return beta * x + (1.0 - beta) * prev


def bandwidth_response(f, b: BandwidthParams) -> np.ndarray:
    """Magnitude response ``|beta + (1 - beta) exp(-2 pi i f / f_s)|`` of :func:`bandwidth_filter`."""
    beta = smoothing_beta(b)
    z = np.exp(-2j * np.pi * np.asarray(f, dtype=float) / b.f_s)
    return np.abs(beta + (1.0 - beta) * z)


def geometric_penalty(cos_psi, eps: float):
    """Noise amplification ``1 / max(|cos psi|, eps)``."""
    return 1.0 / np.maximum(np.abs(cos_psi), eps)
