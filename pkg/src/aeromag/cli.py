"""Command line entry point: ``aeromag <subcommand>``.

Subcommands
-----------
run-scenario
    Full calibration experiment from a JSON config; writes run summaries,
    residual series and sensor spectra.
analyze-errors
    Closed-form error magnitudes and their exact counterparts as CSV.
noise-bench
    Static-field sensor simulation with ASD/ADEV export.
export-trajectory
    Calibration or validation trajectory (and optionally onboard signals) as CSV.

Exit status is 0 on success, 1 for configuration or argument errors and 2
when a regression cannot be solved.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .error_analysis import ERROR_NAMES, error_table

SEED_ENV = "AEROMAG_SEED"


class ConfigError(ValueError):
    pass


def bundled_configs() -> list[str]:
    root = resources.files("aeromag") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir()
                  if p.name.endswith(".json") and p.name != "schema.json")


def load_schema() -> dict:
    return json.loads((resources.files("aeromag") / "configs" / "schema.json").read_text())


def load_config(name_or_path: str) -> dict:
    """Read and schema-check a config file or a bundled config name."""
    import jsonschema

    path = Path(name_or_path)
    if not path.exists():
        stem = name_or_path[:-5] if name_or_path.endswith(".json") else name_or_path
        if stem not in bundled_configs():
            raise ConfigError(f"config {name_or_path!r} not found; bundled configs: "
                              f"{', '.join(bundled_configs())}")
        text = (resources.files("aeromag") / "configs" / f"{stem}.json").read_text()
    else:
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  {'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("config failed validation:\n" + "\n".join(lines))
    return data


def _json_dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _grade_spectra(flights, run, cfg, out: Path, seed: int):
    """ASD and ADEV of each sensor's scalar-channel error on the validation flight."""
    from .magnetometers import SETUPS, measure_series, preset
    from .spectral import allan_deviation, log_taus, welch_asd

    vec_grade, scal_grade = SETUPS[run.setup]
    for grade in (g for g in (vec_grade, scal_grade) if g is not None):
        params = preset(grade, **cfg.sensors.get(grade, {}))
        sig = flights.val_signals
        err = measure_series(params, sig, seed).scalar - sig.Bt
        welch_asd(err, sig.fs).to_csv(out / f"asd_{grade}.csv")
        allan_deviation(err, sig.fs, log_taus(sig.fs, err.size)).to_csv(out / f"adev_{grade}.csv")


def _run_setup(args):
    from . import experiment as ex
    from .calibration import residual_to_csv

    cfg, flights, setup, out, spectra = args
    run = ex.fit_all(cfg, flights, ex.measure(cfg, flights, setup))
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "setup": setup,
        "seed": cfg.seed,
        "scenario": cfg.scenario,
        "results": [r.to_json() for r in run.results.values()],
    }
    for (model, source), result in run.results.items():
        residual, valid = ex.validation_residual(flights, run, result)
        residual_to_csv(flights.val_signals.t, residual,
                        out / f"residuals_{model.value}_{source.value}.csv", valid)
    if spectra:
        _grade_spectra(flights, run, cfg, out, ex._seeds(cfg.seed)["val_sensor"])
    _json_dump(summary, out / "run.json")
    return summary


def cmd_run_scenario(a) -> int:
    from . import experiment as ex
    from .calibration import EstimationError
    from .flight import TrajectoryConfigError
    from .magnetometers import SensorConfigError
    from .tolles_lawson import ScenarioGenerationError

    try:
        data = load_config(a.config)
        if os.environ.get(SEED_ENV):
            try:
                data["seed"] = int(os.environ[SEED_ENV])
            except ValueError:
                raise ConfigError(f"{SEED_ENV} must be an integer") from None
        cfg = ex.config_from_dict(data)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 1
    out = Path(a.out or data.get("output_dir") or f"runs/{data.get('name', 'scenario')}")
    try:
        flights = ex.prepare_flights(cfg)
    except (TrajectoryConfigError, ScenarioGenerationError, ValueError, OSError) as exc:
        print(f"error [flight/scenario]: {exc}", file=sys.stderr)
        return 1
    jobs = [(cfg, flights, setup, out / setup, data.get("spectra", True)) for setup in cfg.setups]
    workers = a.workers or data.get("workers", 1)
    try:
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                summaries = list(pool.map(_run_setup, jobs))
        else:
            summaries = [_run_setup(job) for job in jobs]
    except EstimationError as exc:
        print(f"error [fit]: {exc}", file=sys.stderr)
        return 2
    except SensorConfigError as exc:
        print(f"error [sensors]: {exc}", file=sys.stderr)
        return 1
    index = {
        "schema_version": 1,
        "config": data,
        "coefficients": flights.coefficients.to_json(),
        "runs": {s["setup"]: f"{s['setup']}/run.json" for s in summaries},
    }
    _json_dump(index, out / "run.json")
    for s in summaries:
        for r in s["results"]:
            print(f"{s['setup']:>13} {r['model']:>9} {r['source']:>19}  "
                  f"cal {r['calibration']['mean']:10.4g} nT  val {r['validation']['mean']:10.4g} nT")
    return 0


def parse_angle(text: str) -> float:
    """Angle in degrees; accepts ``deg`` or ``rad`` suffixes. Returns radians."""
    t = text.strip().lower()
    if t.endswith("deg"):
        return np.radians(float(t[:-3]))
    if t.endswith("rad"):
        return float(t[:-3])
    return np.radians(float(t))


def parse_theta_grid(text: str) -> np.ndarray:
    """Comma list of degrees, or ``start:stop:step`` (inclusive of stop)."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ValueError("theta grid step must be positive")
        grid = np.arange(start, stop + 0.5 * step, step)
    else:
        grid = np.array([float(v) for v in text.split(",") if v.strip()])
    if grid.size == 0:
        raise ValueError("empty theta grid")
    return np.radians(grid)


def cmd_analyze_errors(a) -> int:
    try:
        if not a.be > 0:
            raise ValueError("--be must be positive")
        rows = error_table(a.ba, a.be, parse_angle(a.alpha), a.deltab, parse_theta_grid(a.theta_grid))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    columns = ["theta_deg"] + [c for n in ERROR_NAMES for c in (n, n + "_exact")]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([f"{row[c] + 0.0:.10g}" for c in columns])  # no "-0"
    return 0


def static_field_output(grade, duration: float, fs: float, seed: int, magnitude: float = 50000.0):
    """Sensor output error for a constant field along the sensor's preferred axis.

    ``grade`` is a grade name or a :class:`~aeromag.magnetometers.SensorParams`.
    """
    from .magnetometers import N_NV, T_REF, SensorParams, measure_series, preset

    params = grade if isinstance(grade, SensorParams) else preset(grade)
    n = int(round(duration * fs))
    axis = params.noise_axis if params.noise_axis is not None else N_NV
    Bt_b = np.tile(magnitude * axis / np.linalg.norm(axis), (n, 1))
    clean = SimpleNamespace(Bt_b=Bt_b, T_sensor=np.full(n, T_REF), fs=fs)
    out = measure_series(params, clean, seed)
    return out.scalar - magnitude


def cmd_noise_bench(a) -> int:
    from .magnetometers import GRADES
    from .spectral import allan_deviation, log_taus, welch_asd

    if a.grade not in GRADES:
        print(f"error: unknown grade {a.grade!r}; expected one of {', '.join(GRADES)}", file=sys.stderr)
        return 1
    if not (a.duration > 0 and a.fs > 0):
        print("error: --duration and --fs must be positive", file=sys.stderr)
        return 1
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    err = static_field_output(a.grade, a.duration, a.fs, a.seed)
    try:
        asd = welch_asd(err, a.fs)
        adev = allan_deviation(err, a.fs, log_taus(a.fs, err.size))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    asd.to_csv(out / f"asd_{a.grade}.csv")
    adev.to_csv(out / f"adev_{a.grade}.csv")
    if a.series:
        t = np.arange(err.size) / a.fs
        np.savetxt(out / f"series_{a.grade}.csv", np.column_stack([t, err]), delimiter=",",
                   header="t,error_nt", comments="", fmt="%.10g")
    band = (asd.x >= a.fs / 8) & (asd.x <= a.fs / 4)
    print(f"{a.grade}: median ASD {np.median(asd.y[band]):.4g} nT/rtHz "
          f"between {a.fs / 8:g} and {a.fs / 4:g} Hz; files in {out}")
    return 0


def cmd_export_trajectory(a) -> int:
    from .flight import (CalibrationFlightConfig, TrajectoryConfigError, ValidationFlightConfig,
                         background_field, gen_calibration_trajectory, gen_validation_trajectory,
                         signals_to_csv, simulate_onboard, trajectory_to_csv)
    from .tolles_lawson import ScenarioGenerationError, generate_scenario_coefficients

    try:
        if a.kind == "calibration":
            traj = gen_calibration_trajectory(CalibrationFlightConfig(), seed=a.seed)
        else:
            traj = gen_validation_trajectory(ValidationFlightConfig(), seed=a.seed)
    except TrajectoryConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    Path(a.out).parent.mkdir(parents=True, exist_ok=True)
    trajectory_to_csv(traj, a.out)
    if a.signals:
        try:
            coeffs = generate_scenario_coefficients(a.scenario, a.seed)
        except (ScenarioGenerationError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        signals_to_csv(simulate_onboard(traj, background_field(), coeffs, seed=a.seed), a.signals)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aeromag", description="Tolles-Lawson calibration experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run-scenario", help="run a calibration experiment from a JSON config")
    r.add_argument("config", help="config path or bundled name (" + ", ".join(bundled_configs()) + ")")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--workers", type=int, help="process pool size for sensor setups")
    r.set_defaults(func=cmd_run_scenario)

    e = sub.add_parser("analyze-errors", help="closed-form error magnitudes as CSV")
    e.add_argument("--ba", type=float, required=True, help="platform field magnitude, nT")
    e.add_argument("--be", type=float, default=50000.0, help="background magnitude, nT")
    e.add_argument("--alpha", default="0", help="proxy angle error, degrees or with deg/rad suffix")
    e.add_argument("--deltab", type=float, default=0.0, help="proxy magnitude error, nT")
    e.add_argument("--theta-grid", default="0:180:15",
                   help="angles between platform and background field in degrees")
    e.set_defaults(func=cmd_analyze_errors)

    n = sub.add_parser("noise-bench", help="static-field sensor noise spectra")
    n.add_argument("--grade", required=True)
    n.add_argument("--duration", type=float, default=3600.0, help="seconds")
    n.add_argument("--fs", type=float, default=256.0, help="sample rate, Hz")
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--out", default="noise-bench")
    n.add_argument("--series", action="store_true", help="also write the error series")
    n.set_defaults(func=cmd_noise_bench)

    t = sub.add_parser("export-trajectory", help="write a default trajectory as CSV")
    t.add_argument("--kind", choices=("calibration", "validation"), default="calibration")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="trajectory CSV path")
    t.add_argument("--signals", help="also write clean onboard signals to this CSV")
    t.add_argument("--scenario", choices=("random", "perpendicular-stress"), default="random")
    t.set_defaults(func=cmd_export_trajectory)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
