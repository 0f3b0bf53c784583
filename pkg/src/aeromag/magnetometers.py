"""Sensor error models for optically pumped, fluxgate and NV magnetometers.

Every sensor follows the same chain: deterministic physics, additive
stochastic noise (with a geometric penalty where the sensor has a preferred
axis), then the two-tap bandwidth filter.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .noise import BandwidthParams, NoiseParams, bandwidth_filter, geometric_penalty, synth_noise

T_REF = 20.0  # degC
GAMMA_E = 28.024e9  # Hz/T, electron gyromagnetic ratio
ZFS_SLOPE = -74.2e3  # Hz/K
N_NV = np.ones(3) / np.sqrt(3.0)


class SensorConfigError(ValueError):
    pass


def nonorthogonality_matrix(angles_deg, scale_ppm) -> np.ndarray:
    """Upper-triangular coil matrix with per-axis scale errors folded into the rows."""
    a = np.radians(np.asarray(angles_deg, dtype=float))
    M = np.array([[1.0, np.sin(a[0]), np.sin(a[1])],
                  [0.0, 1.0, np.sin(a[2])],
                  [0.0, 0.0, 1.0]])
    return np.diag(1.0 + 1e-6 * np.asarray(scale_ppm, dtype=float)) @ M


@dataclass(frozen=True)
class SensorParams:
    """Parameters of one magnetometer grade; ``None`` disables a stage."""

    grade: str
    kind: str  # "scalar" or "vector"
    noise: NoiseParams | None
    f_bw: float | None
    epsilon_geo: float | None = None
    # optically pumped
    heading_coeffs: tuple = (0.0, 0.0, 0.0)
    heading_harmonics: tuple = (1, 2, 4)
    optical_axis: tuple = (0.0, 0.0, 1.0)
    dead_zone_center_deg: float = 90.0
    dead_zone_half_width_deg: float | None = None
    lol_sigma_factor: float = 100.0
    # vector sensors
    M: np.ndarray = field(default_factory=lambda: np.eye(3))
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    k_s: np.ndarray = field(default_factory=lambda: np.zeros(3))  # 1/K
    k_o: np.ndarray = field(default_factory=lambda: np.zeros(3))  # nT/K
    lambda_t: float | None = None
    n_nv: np.ndarray = field(default_factory=lambda: N_NV.copy())

    def without_errors(self) -> "SensorParams":
        """Same grade with every error source switched off."""
        return replace(
            self, noise=None, f_bw=None, heading_coeffs=(0.0, 0.0, 0.0),
            dead_zone_half_width_deg=None, M=np.eye(3), scale=np.ones(3),
            k_s=np.zeros(3), k_o=np.zeros(3),
            lambda_t=None if self.lambda_t is None else 1.0,
        )

    @property
    def noise_axis(self):
        """Axis against which the noise penalty angle is measured, or ``None``."""
        if self.epsilon_geo is None:
            return None
        return np.asarray(self.optical_axis if self.kind == "scalar" else self.n_nv, dtype=float)


def preset(grade: str, **overrides) -> SensorParams:
    """Default parameters for ``opm``, ``fluxgate``, ``nv-field`` or ``nv-lab``."""
    if grade == "opm":
        p = SensorParams("opm", "scalar", NoiseParams(0.003, 0.5, 1.0), 400.0, 0.1,
                         heading_coeffs=(0.2, 2.5, 0.5), dead_zone_half_width_deg=5.0)
    elif grade == "fluxgate":
        p = SensorParams("fluxgate", "vector", NoiseParams(0.022, 1.0, 1.0), 60.0, None,
                         M=nonorthogonality_matrix([0.05, -0.05, 0.05], [50, -50, 25]),
                         k_s=np.full(3, 30e-6), k_o=np.full(3, 0.1))
    elif grade == "nv-field":
        p = SensorParams("nv-field", "vector", NoiseParams(0.5, 10.0, 2.0), 200.0, 0.15,
                         M=nonorthogonality_matrix([0.05, -0.05, 0.05], [0, 0, 0]),
                         scale=1.0 + 1e-6 * np.array([50.0, -50.0, 25.0]), lambda_t=0.0)
    elif grade == "nv-lab":
        p = SensorParams("nv-lab", "vector", NoiseParams(0.0009, 15.0, 1.5), 1000.0, 0.15,
                         M=nonorthogonality_matrix([0.02, -0.02, 0.02], [0, 0, 0]),
                         scale=1.0 + 1e-6 * np.array([20.0, -20.0, 10.0]), lambda_t=0.995)
    else:
        raise SensorConfigError(f"unknown sensor grade {grade!r}; expected one of {GRADES}")
    if overrides:
        overrides = dict(overrides)
        if "noise" in overrides and isinstance(overrides["noise"], dict):
            overrides["noise"] = replace(p.noise, **overrides["noise"])
        for key in ("M", "scale", "k_s", "k_o", "n_nv"):
            if key in overrides:
                overrides[key] = np.asarray(overrides[key], dtype=float)
        for key in ("heading_coeffs", "heading_harmonics", "optical_axis"):
            if key in overrides:
                overrides[key] = tuple(overrides[key])
        try:
            p = replace(p, **overrides)
        except TypeError as exc:
            raise SensorConfigError(str(exc)) from None
    return p


GRADES = ("opm", "fluxgate", "nv-field", "nv-lab")


@dataclass(frozen=True)
class OpmState:
    locked: bool = True
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not np.isclose(np.linalg.norm(self.axis), 1.0):
            raise ValueError("optical axis must be a unit vector")


@dataclass(frozen=True)
class ThermalState:
    T: float
    T_ref: float = T_REF

    @property
    def dT(self) -> float:
        return self.T - self.T_ref


def opm_heading_error(psi, coeffs=(0.2, 2.5, 0.5), harmonics=(1, 2, 4)):
    """Heading error ``sum c_k cos(n_k psi)`` in nT."""
    psi = np.asarray(psi, dtype=float)
    return sum(c * np.cos(n * psi) for c, n in zip(coeffs, harmonics))


def _cos_to_axis(B, axis):
    B = np.atleast_2d(B)
    norm = np.linalg.norm(B, axis=1)
    if np.any(norm == 0.0):
        raise ValueError("field must be non-zero")
    return B @ np.asarray(axis, dtype=float) / (norm * np.linalg.norm(axis))


def _in_dead_zone(cos_psi, p: SensorParams):
    if p.dead_zone_half_width_deg is None:
        return np.zeros(np.shape(cos_psi), dtype=bool)
    psi = np.degrees(np.arccos(np.clip(cos_psi, -1.0, 1.0)))
    # the dead zone is symmetric about the axis, so fold psi into [0, 90]
    psi = np.minimum(psi, 180.0 - psi)
    center = min(p.dead_zone_center_deg, 180.0 - p.dead_zone_center_deg)
    return np.abs(psi - center) <= p.dead_zone_half_width_deg


def _lol_sigma(p: SensorParams, f_s):
    sigma_w = p.noise.sigma_w if p.noise is not None else 0.0
    return p.lol_sigma_factor * sigma_w * np.sqrt(f_s / 2.0)


def opm_measure(Bt_b, state: OpmState, params: SensorParams, noise_sample: float,
                lol_sample: float = 0.0, f_s: float = 20.0):
    """One unfiltered OPM sample.

    Returns ``(value, new_state)``. Inside the dead zone the noise is replaced
    by ``lol_sample`` scaled to the loss-of-lock deviation and the state is
    unlocked; outside it the sensor is (re)locked.
    """
    cos_psi = float(_cos_to_axis(Bt_b, state.axis)[0])
    psi = np.arccos(np.clip(cos_psi, -1.0, 1.0))
    value = float(np.linalg.norm(Bt_b)) + float(
        opm_heading_error(psi, params.heading_coeffs, params.heading_harmonics))
    if _in_dead_zone(cos_psi, params):
        return value + _lol_sigma(params, f_s) * lol_sample, replace(state, locked=False)
    eps = params.epsilon_geo if params.epsilon_geo is not None else 0.0
    penalty = geometric_penalty(cos_psi, eps) if eps > 0 else 1.0
    return value + noise_sample * penalty, replace(state, locked=True)


def fluxgate_measure(Bt_b, thermal, params: SensorParams) -> np.ndarray:
    """Deterministic fluxgate output ``(M B) * (1 + k_s dT) + k_o dT``.

    ``thermal`` is a :class:`ThermalState`, a temperature deviation or an
    ``(n,)`` array of deviations matching ``(n, 3)`` fields.
    """
    dT = thermal.dT if isinstance(thermal, ThermalState) else np.asarray(thermal, dtype=float)
    dT = np.asarray(dT)[..., None] if np.ndim(dT) else dT
    B = np.asarray(Bt_b, dtype=float)
    return (B @ params.M.T) * (1.0 + params.k_s * dT) + params.k_o * dT


def nv_thermal_shift(dT, lambda_t: float) -> np.ndarray:
    """Magnitude (nT) of the zero-field-splitting thermal shift along the NV axis."""
    return (1.0 - lambda_t) / GAMMA_E * (ZFS_SLOPE * np.asarray(dT, dtype=float)) * 1e9


def nv_measure(Bt_b, thermal, params: SensorParams) -> np.ndarray:
    """Deterministic NV output ``(M B) * s + shift(dT) n_nv``."""
    dT = thermal.dT if isinstance(thermal, ThermalState) else np.asarray(thermal, dtype=float)
    B = np.asarray(Bt_b, dtype=float)
    out = (B @ params.M.T) * params.scale
    if params.lambda_t is not None:
        shift = nv_thermal_shift(dT, params.lambda_t)
        out = out + np.asarray(shift)[..., None] * params.n_nv if np.ndim(shift) else out + shift * params.n_nv
    return out


def nv_scalar(Bv) -> np.ndarray:
    return np.linalg.norm(np.asarray(Bv, dtype=float), axis=-1)


@dataclass(frozen=True)
class SensorOutput:
    """Corrupted series from one sensor or a sensor setup.

    ``valid`` marks samples not affected by loss of lock.
    """

    vector: np.ndarray | None
    scalar: np.ndarray | None
    valid: np.ndarray


def _resolve(grade_or_params):
    if isinstance(grade_or_params, SensorParams):
        return grade_or_params
    return preset(grade_or_params)


def measure_series(sensor, clean, seed) -> SensorOutput:
    """Run a full sensor chain over clean signals.

    ``sensor`` is a grade name or :class:`SensorParams`; ``clean`` needs
    ``Bt_b`` (n, 3), ``T_sensor`` (n,) and ``fs``. Vector grades also report
    the magnitude of their corrupted vector as a scalar channel.
    """
    p = _resolve(sensor)
    Bt_b = np.asarray(clean.Bt_b, dtype=float)
    n = Bt_b.shape[0]
    f_s = float(clean.fs)
    T = np.asarray(clean.T_sensor, dtype=float) if clean.T_sensor is not None else np.full(n, T_REF)
    dT = T - T_REF
    valid = np.ones(n, dtype=bool)
    rng_seed = [int(seed), GRADES.index(p.grade) if p.grade in GRADES else 99]

    if p.kind == "scalar":
        axis = np.asarray(p.optical_axis, dtype=float)
        cos_psi = _cos_to_axis(Bt_b, axis)
        psi = np.arccos(np.clip(cos_psi, -1.0, 1.0))
        out = np.linalg.norm(Bt_b, axis=1) + opm_heading_error(psi, p.heading_coeffs, p.heading_harmonics)
        if p.noise is not None:
            eta = synth_noise(p.noise, n, f_s, rng_seed)
            if p.epsilon_geo is not None:
                eta = eta * geometric_penalty(cos_psi, p.epsilon_geo)
            out = out + eta
        dead = _in_dead_zone(cos_psi, p)
        if np.any(dead):
            lol = np.random.default_rng(rng_seed + [1]).standard_normal(n)
            base = np.linalg.norm(Bt_b, axis=1) + opm_heading_error(psi, p.heading_coeffs, p.heading_harmonics)
            out = np.where(dead, base + _lol_sigma(p, f_s) * lol, out)
            valid &= ~dead
            valid[1:] &= ~dead[:-1]
        if p.f_bw is not None:
            out = bandwidth_filter(out, BandwidthParams(p.f_bw, f_s))
        return SensorOutput(None, out, valid)

    if p.lambda_t is None:
        phys = fluxgate_measure(Bt_b, dT, p)
    else:
        phys = nv_measure(Bt_b, dT, p)
    out = phys
    if p.noise is not None:
        eta = synth_noise(p.noise, n, f_s, rng_seed, channels=3)
        if p.epsilon_geo is not None:
            eta = eta * geometric_penalty(_cos_to_axis(Bt_b, p.noise_axis), p.epsilon_geo)[:, None]
        out = out + eta
    if p.f_bw is not None:
        out = bandwidth_filter(out, BandwidthParams(p.f_bw, f_s))
    return SensorOutput(out, nv_scalar(out), valid)


# sensor setups used for calibration: (vector sensor, scalar sensor); the
# scalar channel of an NV setup is the magnitude of its own vector output
SETUPS = {
    "ideal": (None, None),
    "fluxgate+opm": ("fluxgate", "opm"),
    "nv-field": ("nv-field", None),
    "nv-lab": ("nv-lab", None),
}


def measure_setup(setup: str, clean, seed, overrides: dict | None = None) -> SensorOutput:
    """Vector and scalar channels for a named sensor setup."""
    if setup not in SETUPS:
        raise SensorConfigError(f"unknown sensor setup {setup!r}; expected one of {sorted(SETUPS)}")
    overrides = overrides or {}
    vec_grade, scal_grade = SETUPS[setup]
    if vec_grade is None:
        Bt_b = np.asarray(clean.Bt_b, dtype=float)
        return SensorOutput(Bt_b.copy(), np.linalg.norm(Bt_b, axis=1), np.ones(Bt_b.shape[0], dtype=bool))
    vec = measure_series(preset(vec_grade, **overrides.get(vec_grade, {})), clean, seed)
    if scal_grade is None:
        return vec
    scal = measure_series(preset(scal_grade, **overrides.get(scal_grade, {})), clean, seed)
    return SensorOutput(vec.vector, scal.scalar, vec.valid & scal.valid)
