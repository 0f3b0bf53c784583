"""Compare magnetometer grades on a strong, perpendicular platform field.

Each sensor setup provides both the scalar target and the direction proxy.
Medians over a few seeds show how noise and thermal drift in the vector
channel propagate into the scalar calibration, and a static-field bench shows
each grade's noise level at 1 s and 10 s.
Run with ``python3 demos/sensor_grades.py`` (about half a minute).
"""
import numpy as np

from aeromag.cli import static_field_output
from aeromag.experiment import ExperimentConfig, median_validation
from aeromag.magnetometers import GRADES
from aeromag.spectral import allan_deviation

cfg = ExperimentConfig(scenario="perpendicular-stress", setups=("fluxgate+opm", "nv-field", "nv-lab"))
medians, per_seed = median_validation(cfg, range(5), "scalar-1d", "vector-magnetometer")
print("scalar model, vector-magnetometer proxy, stress platform")
for setup, value in sorted(medians.items(), key=lambda kv: kv[1]):
    spread = ", ".join(f"{v:.3g}" for v in per_seed[setup])
    print(f"  {setup:>13}: median {value:8.3g} nT   (seeds: {spread})")

print("\nstatic 50000 nT field at 256 Hz, 10 min")
for grade in GRADES:
    err = static_field_output(grade, 600.0, 256.0, seed=0)
    adev = allan_deviation(err, 256.0, [1.0, 10.0]).y
    print(f"  {grade:>9}: ADEV(1 s) {adev[0]:.3g} nT, ADEV(10 s) {adev[1]:.3g} nT")
