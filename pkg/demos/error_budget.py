"""How large is each calibration error term for a given platform?

Prints the closed-form magnitudes next to their exact geometric
counterparts for a sweep of angles between platform and background field.
Run with ``python3 demos/error_budget.py``.
"""
import numpy as np

from aeromag.error_analysis import ERROR_NAMES, error_table

Ba, Be = 500.0, 50000.0          # nT
alpha = np.radians(0.1)          # proxy direction error
deltaB = 5.0                     # proxy magnitude error, nT

print(f"platform field {Ba:g} nT, background {Be:g} nT, alpha 0.1 deg, deltaB {deltaB:g} nT\n")
print("each cell: closed form / exact")
print(f"{'theta':>6} " + " ".join(f"{n:>21}" for n in ERROR_NAMES))
for row in error_table(Ba, Be, alpha, deltaB, np.radians(np.arange(0, 181, 30))):
    cells = [f"{row[n] + 0.0:10.4g}/{row[n + '_exact'] + 0.0:<10.4g}" for n in ERROR_NAMES]
    print(f"{row['theta_deg']:6.0f} " + " ".join(cells))

# The vector model pays the full background times the attitude error, while
# the scalar model only pays the platform share of it.
print(f"\nvector / scalar attitude sensitivity at 90 deg: {Be / Ba:.0f}x")
