"""End-to-end calibration experiments: flights, platform, sensors, fits.

An experiment flies one calibration and one validation trajectory through a
common background field, corrupts the onboard signals with each requested
sensor setup and fits every requested model/source pair on the calibration
flight before scoring it on the validation flight.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .calibration import (AttitudeSource, CalibrationOptions, CalibrationResult, Model,
                          calibrate_and_validate, compensate)
from .flight import (CalibrationFlightConfig, GyroErrorParams, OnboardSignals, Trajectory,
                     ValidationFlightConfig, background_along, background_field,
                     gen_calibration_trajectory, gen_validation_trajectory, simulate_onboard,
                     trajectory_from_csv)
from .magnetometers import SETUPS, SensorOutput, measure_setup
from .tolles_lawson import TlCoefficients, generate_scenario_coefficients


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    scenario: str = "random"
    setups: tuple = ("ideal",)
    sources: tuple = ("perfect", "vector-magnetometer", "ins")
    models: tuple = ("scalar-1d", "vector-3d")
    calibration_flight: CalibrationFlightConfig = CalibrationFlightConfig()
    validation_flight: ValidationFlightConfig = ValidationFlightConfig()
    gyro: GyroErrorParams = GyroErrorParams()
    background: dict = field(default_factory=lambda: {"magnitude": 50000.0, "inclination_deg": 70.0,
                                                      "declination_deg": 0.0})
    sensors: dict = field(default_factory=dict)
    options: CalibrationOptions = CalibrationOptions()
    calibration_csv: str | None = None
    validation_csv: str | None = None


@dataclass
class Flights:
    """Clean inputs shared by every sensor setup of one experiment."""

    calibration: Trajectory
    validation: Trajectory
    coefficients: TlCoefficients
    cal_signals: OnboardSignals
    val_signals: OnboardSignals


@dataclass
class SetupRun:
    setup: str
    cal_measurements: SensorOutput
    val_measurements: SensorOutput
    results: dict = field(default_factory=dict)  # (model, source) -> CalibrationResult


def _seeds(seed: int) -> dict:
    names = ("cal_traj", "val_traj", "scenario", "cal_gyro", "val_gyro", "cal_sensor", "val_sensor")
    state = np.random.SeedSequence(int(seed)).generate_state(len(names))
    return dict(zip(names, (int(s) for s in state)))


def prepare_flights(cfg: ExperimentConfig) -> Flights:
    s = _seeds(cfg.seed)
    Be_e = background_field(**cfg.background)
    if cfg.calibration_csv is None:
        cal = gen_calibration_trajectory(cfg.calibration_flight, seed=s["cal_traj"])
    else:
        cal = trajectory_from_csv(cfg.calibration_csv, cfg.calibration_flight.speed)
    if cfg.validation_csv is None:
        val = gen_validation_trajectory(cfg.validation_flight, seed=s["val_traj"])
    else:
        val = trajectory_from_csv(cfg.validation_csv, cfg.validation_flight.speed)
    Be_b, dBe_b = background_along(cal, Be_e)
    coeffs = generate_scenario_coefficients(cfg.scenario, s["scenario"], Be_b, dBe_b)
    return Flights(
        cal, val, coeffs,
        simulate_onboard(cal, Be_e, coeffs, cfg.gyro, seed=s["cal_gyro"]),
        simulate_onboard(val, Be_e, coeffs, cfg.gyro, seed=s["val_gyro"]),
    )


def measure(cfg: ExperimentConfig, flights: Flights, setup: str) -> SetupRun:
    s = _seeds(cfg.seed)
    return SetupRun(
        setup,
        measure_setup(setup, flights.cal_signals, s["cal_sensor"], cfg.sensors),
        measure_setup(setup, flights.val_signals, s["val_sensor"], cfg.sensors),
    )


def fit_all(cfg: ExperimentConfig, flights: Flights, run: SetupRun) -> SetupRun:
    """Fit every model/source pair; estimation errors propagate to the caller."""
    for model in cfg.models:
        for source in cfg.sources:
            run.results[(Model(model), AttitudeSource(source))] = calibrate_and_validate(
                model, source, flights.cal_signals, run.cal_measurements,
                flights.val_signals, run.val_measurements, cfg.options,
            )
    return run


def validation_residual(flights: Flights, run: SetupRun, result: CalibrationResult):
    """Per-sample validation residual and the validity mask used for its statistics."""
    _, residual, _ = compensate(flights.val_signals, run.val_measurements, result)
    return residual, run.val_measurements.valid


def run_experiment(cfg: ExperimentConfig) -> tuple[Flights, list[SetupRun]]:
    flights = prepare_flights(cfg)
    return flights, [fit_all(cfg, flights, measure(cfg, flights, setup)) for setup in cfg.setups]


def median_validation(cfg: ExperimentConfig, seeds, model="scalar-1d", source="vector-magnetometer"):
    """Median over seeds of the validation residual mean, per setup."""
    cfg = replace(cfg, models=(model,), sources=(source,))
    means = {setup: [] for setup in cfg.setups}
    for seed in seeds:
        _, runs = run_experiment(replace(cfg, seed=int(seed)))
        for run in runs:
            means[run.setup].append(run.results[(Model(model), AttitudeSource(source))].validation.mean)
    return {setup: float(np.median(v)) for setup, v in means.items()}, means


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build a config from the JSON-level mapping (already schema-checked)."""
    traj = d.get("trajectory", {})

    def build(cls, values):
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in values.items()})

    options = dict(d.get("calibration", {}))
    if options.get("derivative_cutoff") == "none":
        options["derivative_cutoff"] = None
    bg = {"magnitude": 50000.0, "inclination_deg": 70.0, "declination_deg": 0.0}
    bg.update(d.get("background", {}))
    setups = tuple(d.get("setups", ("ideal",)))
    unknown = set(setups) - set(SETUPS)
    if unknown:
        raise ValueError(f"unknown sensor setups: {sorted(unknown)}")
    return ExperimentConfig(
        seed=int(d.get("seed", 0)),
        scenario=d.get("scenario", "random"),
        setups=setups,
        sources=tuple(d.get("sources", ExperimentConfig.sources)),
        models=tuple(d.get("models", ExperimentConfig.models)),
        calibration_flight=build(CalibrationFlightConfig, traj.get("calibration", {})),
        validation_flight=build(ValidationFlightConfig, traj.get("validation", {})),
        gyro=build(GyroErrorParams, d.get("gyro", {})),
        background=bg,
        sensors=d.get("sensors", {}),
        options=build(CalibrationOptions, options),
        calibration_csv=traj.get("calibration_csv"),
        validation_csv=traj.get("validation_csv"),
    )
