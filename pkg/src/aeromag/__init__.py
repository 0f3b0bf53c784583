"""Simulation and regression toolkit for Tolles-Lawson aeromagnetic calibration.

Submodules
----------
frames          rotations and angle utilities
tolles_lawson   platform field model, regressors, ground-truth scenarios
error_analysis  closed-form calibration error magnitudes and exact oracles
noise           coloured noise synthesis and the bandwidth filter
magnetometers   OPM, fluxgate and NV sensor error models
flight          trajectories, sensor temperature, INS drift, onboard signals
calibration     least-squares fits, compensation and residual statistics
spectral        Welch ASD and overlapping Allan deviation
experiment      end-to-end calibration experiments
"""
import importlib

_EXPORTS = {
    "calibration": ("AttitudeSource", "CalibrationOptions", "CalibrationResult", "EstimationError",
                    "Model", "calibrate_and_validate", "compensate", "fit_scalar", "fit_vector"),
    "flight": ("GyroErrorParams", "OnboardSignals", "Trajectory", "background_field",
               "gen_calibration_trajectory", "gen_validation_trajectory", "simulate_onboard"),
    "magnetometers": ("SensorParams", "measure_series", "measure_setup", "preset"),
    "tolles_lawson": ("TlCoefficients", "generate_scenario_coefficients", "platform_field",
                      "scalar_regressor", "vector_regressor"),
}
_ORIGIN = {name: module for module, names in _EXPORTS.items() for name in names}

__version__ = "0.1.0"
__all__ = sorted(_ORIGIN)


def __getattr__(name):
    # submodules pull in scipy; load them on first use so the CLI starts quickly
    if name in _ORIGIN:
        return getattr(importlib.import_module(f".{_ORIGIN[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_ORIGIN))
