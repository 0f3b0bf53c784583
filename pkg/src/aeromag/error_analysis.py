"""Closed-form calibration error magnitudes and an explicit-vector oracle.

All angles are in radians. The oracle builds the worst-case coplanar
geometry: the background field along x, the platform field at angle
``theta`` in the x-y plane, and the misaligned proxy direction rotated by
``alpha`` in the same plane towards the platform field.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ErrorScenario:
    Ba: float
    Be: float
    theta: float
    alpha: float = 0.0
    deltaB: float = 0.0

    def __post_init__(self):
        if not self.Be > 0:
            raise ValueError("background magnitude Be must be positive")
        if self.Ba < 0:
            raise ValueError("platform magnitude Ba must be non-negative")
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta must lie in [0, pi]")
        if not 0.0 <= self.alpha < np.pi / 2:
            raise ValueError("alpha must lie in [0, pi/2)")


def taylor_projection_error(s: ErrorScenario) -> float:
    """Second-order term dropped by the scalar projection, ``Ba^2/(2 Be) sin^2 theta``."""
    return s.Ba ** 2 / (2.0 * s.Be) * np.sin(s.theta) ** 2


def proxy_direction_error_scalar(s: ErrorScenario) -> float:
    """Scalar-model error from projecting onto the total-field direction."""
    return s.Ba ** 2 / s.Be * np.sin(s.theta) ** 2


def proxy_direction_error_vector(s: ErrorScenario, second_order: bool = False) -> float:
    """Vector-model error from forcing the platform field parallel to the total field.

    Leading order is ``Ba sin theta``; ``second_order=True`` keeps the
    ``(1 - Ba/Be cos theta)`` correction.
    """
    err = s.Ba * np.sin(s.theta)
    if second_order:
        err *= 1.0 - s.Ba / s.Be * np.cos(s.theta)
    return err


def scalar_attitude_error(s: ErrorScenario) -> float:
    """Signed scalar-model error for an in-plane attitude error ``alpha``."""
    return -s.Ba * (s.alpha * np.sin(s.theta) - 0.5 * s.alpha ** 2 * np.cos(s.theta))


def vector_error_magnitude(s: ErrorScenario) -> float:
    """Vector-model error norm ``sqrt(dB^2 + (Be alpha)^2)``."""
    return float(np.hypot(s.deltaB, s.Be * s.alpha))


def exact_vector_oracle(s: ErrorScenario) -> dict:
    """Exact counterparts of every closed form, from explicit 3-vectors."""
    Be = s.Be * np.array([1.0, 0.0, 0.0])
    Ba = s.Ba * np.array([np.cos(s.theta), np.sin(s.theta), 0.0])
    Bt = Be + Ba
    Bt_hat = Bt / np.linalg.norm(Bt)
    Be_hat = Be / s.Be
    r_hat = np.array([np.cos(s.alpha), np.sin(s.alpha), 0.0])

    along_t = Ba @ Bt_hat
    return {
        "taylor_projection": float(np.linalg.norm(Bt) - (s.Be + s.Ba * np.cos(s.theta))),
        "proxy_scalar": float(along_t - Ba @ Be_hat),
        "proxy_vector": float(np.linalg.norm(Ba - along_t * Bt_hat)),
        "scalar_attitude": float(Ba @ Be_hat - Ba @ r_hat),
        "vector_attitude": float(np.linalg.norm(Be - (s.Be + s.deltaB) * r_hat)),
    }


def closed_forms(s: ErrorScenario) -> dict:
    return {
        "taylor_projection": float(taylor_projection_error(s)),
        "proxy_scalar": float(proxy_direction_error_scalar(s)),
        "proxy_vector": float(proxy_direction_error_vector(s)),
        "scalar_attitude": float(scalar_attitude_error(s)),
        "vector_attitude": vector_error_magnitude(s),
    }


ERROR_NAMES = ("taylor_projection", "proxy_scalar", "proxy_vector", "scalar_attitude", "vector_attitude")


def error_table(Ba: float, Be: float, alpha: float, deltaB: float, thetas) -> list[dict]:
    """One row per ``theta`` with every closed form and its oracle value."""
    rows = []
    for theta in np.atleast_1d(thetas):
        s = ErrorScenario(Ba, Be, float(theta), alpha, deltaB)
        formula = closed_forms(s)
        exact = exact_vector_oracle(s)
        row = {"theta_deg": float(np.degrees(theta))}
        for name in ERROR_NAMES:
            row[name] = formula[name]
            row[name + "_exact"] = exact[name]
        rows.append(row)
    return rows
