"""Flight trajectories, sensor temperature, INS attitude drift and clean
onboard magnetic signals.

Attitude profiles are built from smooth analytic pieces (raised-cosine turns
and windowed sine excitation bursts), so attitude rates and the background
field derivative in the body frame are exact rather than differenced.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter
from scipy.spatial.transform import Rotation

from .frames import euler_rates_to_rotation_rate, euler_to_rotation
from .tolles_lawson import TlCoefficients, platform_field

G = 9.81
DEG = np.pi / 180.0

BACKGROUND_MAGNITUDE = 50000.0  # nT


class TrajectoryConfigError(ValueError):
    pass


def background_field(magnitude=BACKGROUND_MAGNITUDE, inclination_deg=70.0,
                     declination_deg=0.0) -> np.ndarray:
    """Earth-frame (NED) background field vector in nT."""
    inc = inclination_deg * DEG
    dec = declination_deg * DEG
    return magnitude * np.array([np.cos(inc) * np.cos(dec), np.cos(inc) * np.sin(dec), np.sin(inc)])


@dataclass(frozen=True)
class Burst:
    kind: str  # "roll" or "pitch"
    start: float
    period: float
    amplitude: float  # rad, signed peak


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled flight: attitude and rates are ``(n, 3)`` as roll, pitch, yaw."""

    t: np.ndarray
    fs: float
    position: np.ndarray
    altitude: np.ndarray
    attitude: np.ndarray
    rates: np.ndarray
    bursts: tuple = ()
    name: str = ""

    def __len__(self):
        return self.t.size

    @property
    def duration(self) -> float:
        return self.t.size / self.fs

    @property
    def R_eb(self) -> np.ndarray:
        return euler_to_rotation(self.attitude)

    @property
    def R_eb_dot(self) -> np.ndarray:
        return euler_rates_to_rotation_rate(self.attitude, self.rates)


@dataclass(frozen=True)
class CalibrationFlightConfig:
    laps: int = 5
    lap_time: float = 132.0
    speed: float = 60.0
    fs: float = 20.0
    altitude: float = 300.0
    altitude_amplitude: float = 50.0
    altitude_period: float = 600.0
    turn_bank_deg: tuple = (45.0, 55.0)
    roll_amplitude_deg: tuple = (5.0, 15.0)
    pitch_amplitude_deg: tuple = (3.0, 10.0)
    burst_period: float = 5.5
    burst_pattern: tuple = ("roll", "pitch")
    roll_envelope_deg: tuple = (-55.0, 15.0)
    pitch_envelope_deg: tuple = (-10.0, 10.0)


@dataclass(frozen=True)
class ValidationFlightConfig:
    lines: int = 8
    duration: float = 3480.0
    turn_time: float = 60.0
    speed: float = 60.0
    fs: float = 20.0
    altitude_start: float = 300.0
    altitude_end: float = 300.0
    wander_roll_deg: float = 0.3
    wander_pitch_deg: float = 0.2


def _burst_shape(s, period):
    """Zero-mean windowed sine on ``[0, period]`` with unit peak, and its derivative."""
    w = 2.0 * np.pi / period
    x = w * s
    k = 1.0 / 0.649519052838329  # 1 / max(sin x (1 - cos x) / 2)
    val = k * np.sin(x) * (1.0 - np.cos(x)) / 2.0
    der = k * w * (np.cos(x) * (1.0 - np.cos(x)) + np.sin(x) ** 2) / 2.0
    return val, der


def _turn(s, duration, angle, speed):
    """Raised-cosine heading change of ``angle`` over ``duration``.

    Returns heading offset, heading rate, coordinated bank angle and bank rate.
    """
    w = 2.0 * np.pi / duration
    mean_rate = angle / duration
    yaw = mean_rate * (s - np.sin(w * s) / w)
    yaw_rate = mean_rate * (1.0 - np.cos(w * s))
    yaw_acc = mean_rate * w * np.sin(w * s)
    u = speed * yaw_rate / G
    bank = np.arctan(u)
    bank_rate = speed * yaw_acc / G / (1.0 + u * u)
    return yaw, yaw_rate, bank, bank_rate


def _integrate_position(t, yaw, speed, altitude):
    dt = t[1] - t[0] if t.size > 1 else 1.0
    vn = speed * np.cos(yaw)
    ve = speed * np.sin(yaw)
    north = np.concatenate([[0.0], np.cumsum(0.5 * (vn[1:] + vn[:-1]) * dt)])
    east = np.concatenate([[0.0], np.cumsum(0.5 * (ve[1:] + ve[:-1]) * dt)])
    return np.stack([north, east, -altitude], axis=1)


def gen_calibration_trajectory(cfg: CalibrationFlightConfig = CalibrationFlightConfig(),
                               seed: int = 0) -> Trajectory:
    """Square calibration pattern with roll and pitch excitation bursts.

    Each lap has four legs; every leg ends in a coordinated 90 degree left
    turn and carries one burst per entry of ``cfg.burst_pattern`` (order
    alternates between legs). Amplitudes and turn banks are drawn from the
    configured ranges.
    """
    _check_calibration_cfg(cfg)
    rng = np.random.default_rng(seed)
    n = int(round(cfg.laps * cfg.lap_time * cfg.fs))
    t = np.arange(n) / cfg.fs
    att = np.zeros((n, 3))
    rates = np.zeros((n, 3))
    leg_time = cfg.lap_time / 4.0
    bursts = []
    heading = 0.0

    for leg in range(4 * cfg.laps):
        t0 = leg * leg_time
        bank = rng.uniform(*cfg.turn_bank_deg) * DEG
        turn_time = np.pi * cfg.speed / (G * np.tan(bank))
        straight = leg_time - turn_time
        pattern = cfg.burst_pattern if leg % 2 == 0 else cfg.burst_pattern[::-1]
        slot = straight / max(len(pattern), 1)
        if slot < cfg.burst_period:
            raise TrajectoryConfigError(
                f"leg {leg}: {straight:.1f} s of straight flight cannot hold "
                f"{len(pattern)} bursts of {cfg.burst_period} s"
            )
        for j, kind in enumerate(pattern):
            rng_amp = cfg.roll_amplitude_deg if kind == "roll" else cfg.pitch_amplitude_deg
            amp = rng.uniform(*rng_amp) * DEG * rng.choice([-1.0, 1.0])
            start = t0 + j * slot + 0.5 * (slot - cfg.burst_period)
            bursts.append(Burst(kind, start, cfg.burst_period, amp))

        # heading is constant on the straight part, then the turn
        in_leg = (t >= t0) & (t < t0 + leg_time)
        att[in_leg, 2] = heading
        tt = t0 + straight
        in_turn = (t >= tt) & (t < t0 + leg_time)
        s = t[in_turn] - tt
        dyaw, yaw_rate, roll, roll_rate = _turn(s, turn_time, -np.pi / 2.0, cfg.speed)
        att[in_turn, 2] = heading + dyaw
        att[in_turn, 0] = roll
        rates[in_turn, 2] = yaw_rate
        rates[in_turn, 0] = roll_rate
        heading -= np.pi / 2.0

    for b in bursts:
        axis = 0 if b.kind == "roll" else 1
        sel = (t >= b.start) & (t <= b.start + b.period)
        val, der = _burst_shape(t[sel] - b.start, b.period)
        att[sel, axis] += b.amplitude * val
        rates[sel, axis] += b.amplitude * der

    altitude = cfg.altitude + cfg.altitude_amplitude * np.sin(2.0 * np.pi * t / cfg.altitude_period)
    position = _integrate_position(t, att[:, 2], cfg.speed, altitude)
    return Trajectory(t, cfg.fs, position, altitude, att, rates, tuple(bursts), "calibration")


def _check_calibration_cfg(cfg):
    lo, hi = cfg.roll_envelope_deg
    if max(cfg.roll_amplitude_deg) > min(-lo, hi) or max(cfg.turn_bank_deg) > -lo:
        raise TrajectoryConfigError("roll amplitudes or turn banks exceed the roll envelope")
    plo, phi = cfg.pitch_envelope_deg
    if max(cfg.pitch_amplitude_deg) > min(-plo, phi):
        raise TrajectoryConfigError("pitch amplitudes exceed the pitch envelope")
    if min(cfg.turn_bank_deg) <= 0 or cfg.laps < 1 or cfg.fs <= 0 or cfg.speed <= 0:
        raise TrajectoryConfigError("laps, fs, speed and turn banks must be positive")
    for kind in cfg.burst_pattern:
        if kind not in ("roll", "pitch"):
            raise TrajectoryConfigError(f"unknown burst kind {kind!r}")


def gen_validation_trajectory(cfg: ValidationFlightConfig = ValidationFlightConfig(),
                              seed: int = 0) -> Trajectory:
    """Survey pattern of parallel north/south lines joined by 180 degree turns."""
    if cfg.lines < 1 or cfg.duration <= (cfg.lines - 1) * cfg.turn_time:
        raise TrajectoryConfigError("validation flight too short for the requested lines and turns")
    rng = np.random.default_rng(seed)
    n = int(round(cfg.duration * cfg.fs))
    t = np.arange(n) / cfg.fs
    att = np.zeros((n, 3))
    rates = np.zeros((n, 3))
    line_time = (cfg.duration - (cfg.lines - 1) * cfg.turn_time) / cfg.lines
    heading = 0.0
    for k in range(cfg.lines):
        t0 = k * (line_time + cfg.turn_time)
        att[(t >= t0) & (t < t0 + line_time), 2] = heading
        if k == cfg.lines - 1:
            att[t >= t0, 2] = heading
            break
        tt = t0 + line_time
        sel = (t >= tt) & (t < tt + cfg.turn_time)
        angle = np.pi if k % 2 == 0 else -np.pi
        dyaw, yaw_rate, roll, roll_rate = _turn(t[sel] - tt, cfg.turn_time, angle, cfg.speed)
        att[sel, 2] = heading + dyaw
        att[sel, 0] = roll
        rates[sel, 2] = yaw_rate
        rates[sel, 0] = roll_rate
        heading += angle

    # slow attitude wander: a few low-frequency sinusoids per axis
    for axis, amp in ((0, cfg.wander_roll_deg), (1, cfg.wander_pitch_deg)):
        if amp <= 0:
            continue
        freqs = rng.uniform(0.005, 0.05, 3)
        phases = rng.uniform(0, 2 * np.pi, 3)
        w = 2 * np.pi * freqs[:, None]
        att[:, axis] += amp * DEG / np.sqrt(3) * np.sum(np.sin(w * t + phases[:, None]), axis=0)
        rates[:, axis] += amp * DEG / np.sqrt(3) * np.sum(w * np.cos(w * t + phases[:, None]), axis=0)

    altitude = np.interp(t, [0.0, t[-1]], [cfg.altitude_start, cfg.altitude_end])
    position = _integrate_position(t, att[:, 2], cfg.speed, altitude)
    return Trajectory(t, cfg.fs, position, altitude, att, rates, (), "validation")


def count_excitations(traj: Trajectory, threshold_deg: float = 0.5, merge_gap: float = 1.0) -> int:
    """Count roll/pitch excitation bursts outside turns from the attitude series.

    A burst is a run of samples with roll or pitch above ``threshold_deg``;
    runs separated by less than ``merge_gap`` seconds (the zero crossing in
    the middle of a burst) count once.
    """
    turning = np.abs(traj.rates[:, 2]) > 1e-3
    active = ~turning & (np.abs(traj.attitude[:, :2]) > threshold_deg * DEG).any(axis=1)
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return 0
    gaps = np.diff(idx) > merge_gap * traj.fs
    return int(1 + np.sum(gaps))


def sensor_temperature(altitude, fs: float, tau: float = 300.0,
                       sea_level_temp: float = 20.0, lapse_rate: float = 0.0065) -> np.ndarray:
    """Internal sensor temperature from altitude through a first-order lag.

    Ambient temperature follows a linear lapse rate. The lag is discretised
    exactly with the ambient held constant over each interval
    ``(t[k-1], t[k]]``; the initial state is the ambient value at the start.
    """
    altitude = np.asarray(altitude, dtype=float)
    ambient = sea_level_temp - lapse_rate * altitude
    if tau <= 0:
        return ambient.copy()
    a = np.exp(-1.0 / (fs * tau))
    out, _ = lfilter([1.0 - a], [1.0, -a], ambient, zi=[a * ambient[0]])
    return out


@dataclass(frozen=True)
class GyroErrorParams:
    """Tactical-grade gyro: angular random walk (rad/sqrt(s)), bias std (rad/s), bias time constant (s)."""

    arw: float = 3.6e-5
    bias_sigma: float = 4.8e-6
    bias_tau: float = 3600.0
    bias_init: str = "zero"  # "zero" or "stationary"


def gyro_attitude_error(p: GyroErrorParams, n: int, fs: float, seed: int) -> np.ndarray:
    """Integrated gyro error ``(n, 3)`` in rad: angle random walk plus Gauss-Markov bias."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    dt = 1.0 / fs
    white = rng.standard_normal((n, 3))
    drive = rng.standard_normal((n, 3))
    phi = np.exp(-dt / p.bias_tau)
    q = p.bias_sigma * np.sqrt(1.0 - phi * phi)
    b0 = rng.standard_normal(3) * p.bias_sigma if p.bias_init == "stationary" else np.zeros(3)
    bias, _ = lfilter([q], [1.0, -phi], drive, axis=0, zi=(phi * b0)[None, :])
    increments = bias * dt + p.arw * np.sqrt(dt) * white
    increments[0] = 0.0
    return np.cumsum(increments, axis=0)


@dataclass(frozen=True)
class OnboardSignals:
    """Clean magnetic signals along a trajectory (all vectors body frame, nT)."""

    t: np.ndarray
    fs: float
    Be_e: np.ndarray
    Be_b: np.ndarray
    dBe_b: np.ndarray
    Ba_b: np.ndarray
    Bt_b: np.ndarray
    Bt: np.ndarray
    T_sensor: np.ndarray
    R_eb: np.ndarray
    R_hat_eb: np.ndarray
    attitude_error: np.ndarray = field(default=None)

    def __len__(self):
        return self.t.size


def background_along(traj: Trajectory, Be_e=None):
    """Background field and its exact time derivative in the body frame."""
    if Be_e is None:
        Be_e = background_field()
    Be_e = np.asarray(Be_e, dtype=float)
    Be_b = np.einsum("nji,j->ni", traj.R_eb, Be_e)
    dBe_b = np.einsum("nji,j->ni", traj.R_eb_dot, Be_e)
    return Be_b, dBe_b


def simulate_onboard(traj: Trajectory, Be_e, coeffs: TlCoefficients,
                     gyro: GyroErrorParams | None = GyroErrorParams(), seed: int = 0,
                     thermal_tau: float = 300.0) -> OnboardSignals:
    """Clean onboard signals plus the INS attitude estimate for ``traj``."""
    Be_e = np.asarray(Be_e, dtype=float)
    R = traj.R_eb
    Be_b, dBe_b = background_along(traj, Be_e)
    Ba_b = platform_field(coeffs, Be_b, dBe_b)
    Bt_b = Be_b + Ba_b
    T_sensor = sensor_temperature(traj.altitude, traj.fs, thermal_tau)
    if gyro is None:
        err = np.zeros((len(traj), 3))
    else:
        err = gyro_attitude_error(gyro, len(traj), traj.fs, seed)
    R_hat = R @ Rotation.from_rotvec(err).as_matrix()
    return OnboardSignals(
        t=traj.t, fs=traj.fs, Be_e=Be_e, Be_b=Be_b, dBe_b=dBe_b, Ba_b=Ba_b,
        Bt_b=Bt_b, Bt=np.linalg.norm(Bt_b, axis=1), T_sensor=T_sensor,
        R_eb=R, R_hat_eb=R_hat, attitude_error=err,
    )


TRAJECTORY_COLUMNS = ("t", "north", "east", "down", "altitude", "roll", "pitch", "yaw",
                      "roll_rate", "pitch_rate", "yaw_rate")


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write one row per sample; angles in rad, rates in rad/s, lengths in m."""
    data = np.column_stack([traj.t, traj.position, traj.altitude, traj.attitude, traj.rates])
    np.savetxt(path, data, delimiter=",", header=",".join(TRAJECTORY_COLUMNS),
               comments="", fmt="%.12g")


def trajectory_from_csv(path, speed: float = 60.0) -> Trajectory:
    """Read a trajectory CSV with at least ``t, roll, pitch, yaw, altitude`` columns.

    Angles are in radians. Missing rate columns are obtained with
    ``numpy.gradient``; missing positions are integrated from ``speed``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
    missing = {"t", "roll", "pitch", "yaw", "altitude"} - set(header)
    if missing:
        raise ValueError(f"trajectory CSV is missing columns {sorted(missing)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    col = {name: data[:, i] for i, name in enumerate(header)}
    t = col["t"]
    dt = np.diff(t)
    if t.size < 2 or np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-6):
        raise ValueError("trajectory CSV must be uniformly sampled in increasing time")
    fs = 1.0 / dt[0]
    att = np.column_stack([col["roll"], col["pitch"], np.unwrap(col["yaw"])])
    if {"roll_rate", "pitch_rate", "yaw_rate"} <= set(header):
        rates = np.column_stack([col["roll_rate"], col["pitch_rate"], col["yaw_rate"]])
    else:
        rates = np.gradient(att, dt[0], axis=0)
    altitude = col["altitude"]
    if {"north", "east"} <= set(header):
        position = np.column_stack([col["north"], col["east"], -altitude])
    else:
        position = _integrate_position(t - t[0], att[:, 2], speed, altitude)
    return Trajectory(t - t[0], fs, position, altitude, att, rates, (), "imported")


SIGNAL_COLUMNS = (
    ["t"]
    + [f"Be_{a}" for a in "xyz"] + [f"dBe_{a}" for a in "xyz"]
    + [f"Ba_{a}" for a in "xyz"] + [f"Bt_{a}" for a in "xyz"]
    + ["Bt", "T_sensor"]
    + [f"ins_err_{a}" for a in "xyz"]
    + [f"Rhat_{i}{j}" for i in range(1, 4) for j in range(1, 4)]
)


def signals_to_csv(sig: OnboardSignals, path) -> None:
    data = np.column_stack([
        sig.t, sig.Be_b, sig.dBe_b, sig.Ba_b, sig.Bt_b, sig.Bt, sig.T_sensor,
        sig.attitude_error, sig.R_hat_eb.reshape(-1, 9),
    ])
    np.savetxt(path, data, delimiter=",", header=",".join(SIGNAL_COLUMNS),
               comments="", fmt="%.12g")


def with_altitude(traj: Trajectory, altitude) -> Trajectory:
    """Copy of ``traj`` with a replaced altitude profile."""
    altitude = np.broadcast_to(np.asarray(altitude, dtype=float), traj.t.shape).copy()
    pos = traj.position.copy()
    pos[:, 2] = -altitude
    return replace(traj, altitude=altitude, position=pos)
