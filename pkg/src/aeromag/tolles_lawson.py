"""Tolles-Lawson platform-field model and regressor construction.

The platform field is ``B_a = p + N B_e + E dB_e/dt`` (all in the body
frame). Two regression forms are provided:

* the scalar (1D) form with 18 columns, where the induced matrix collapses to
  six upper-triangular combinations because it only enters through the
  quadratic form ``B^T N B / |B|``;
* the vector (3D) form with 21 columns (3 permanent, 9 induced, 9 eddy).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_SCALAR = 18
N_VECTOR = 21

# (i, j) index pairs of the reduced induced terms B_i * Bhat_j, row order
_INDUCED_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


class ScenarioGenerationError(RuntimeError):
    """Raised when coefficient targets cannot be met."""


@dataclass(frozen=True)
class TlCoefficients:
    """Permanent vector ``p`` (nT), induced matrix ``N`` and eddy matrix ``E`` (s)."""

    p: np.ndarray
    N: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(3)
        N = np.asarray(self.N, dtype=float).reshape(3, 3)
        E = np.asarray(self.E, dtype=float).reshape(3, 3)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(N)) and np.all(np.isfinite(E))):
            raise ValueError("coefficients must be finite")
        for arr in (p, N, E):
            arr.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "E", E)

    @classmethod
    def zeros(cls) -> "TlCoefficients":
        return cls(np.zeros(3), np.zeros((3, 3)), np.zeros((3, 3)))

    @classmethod
    def from_vector(cls, x) -> "TlCoefficients":
        """Inverse of :meth:`vector_coefficients` (21 entries)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (N_VECTOR,):
            raise ValueError(f"expected {N_VECTOR} coefficients, got shape {x.shape}")
        return cls(x[:3], x[3:12].reshape(3, 3), x[12:].reshape(3, 3))

    def vector_coefficients(self) -> np.ndarray:
        """``[p, vec(N), vec(E)]`` with row-major flattening (21 entries)."""
        return np.concatenate([self.p, self.N.ravel(), self.E.ravel()])

    def scalar_coefficients(self) -> np.ndarray:
        """18-entry parameter vector matching :func:`scalar_regressor`."""
        # eddy columns are ordered dB_j * Bhat_i with j outermost, whose
        # coefficient is E[i, j]
        return np.concatenate([self.p, reduce_induced(self.N), self.E.T.ravel()])

    def to_json(self) -> dict:
        return {
            "p": self.p.tolist(),
            "N": self.N.ravel().tolist(),
            "E": self.E.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TlCoefficients":
        try:
            return cls(obj["p"], obj["N"], obj["E"])
        except KeyError as exc:
            raise ValueError(f"coefficient object is missing field {exc}") from None


def platform_field(c: TlCoefficients, Be_b, dBe_b) -> np.ndarray:
    """Platform field ``p + N Be + E dBe``; accepts single vectors or ``(n, 3)``."""
    Be_b = np.asarray(Be_b, dtype=float)
    dBe_b = np.asarray(dBe_b, dtype=float)
    return c.p + Be_b @ c.N.T + dBe_b @ c.E.T


def total_field(Be_b, Ba_b) -> np.ndarray:
    return np.asarray(Be_b, dtype=float) + np.asarray(Ba_b, dtype=float)


def reduce_induced(N) -> np.ndarray:
    """Collapse a 3x3 induced matrix to the six terms seen by a projection.

    Returns ``(N11, N12+N21, N13+N31, N22, N23+N32, N33)``.
    """
    N = np.asarray(N, dtype=float)
    return np.array([
        N[0, 0],
        N[0, 1] + N[1, 0],
        N[0, 2] + N[2, 0],
        N[1, 1],
        N[1, 2] + N[2, 1],
        N[2, 2],
    ])


def scalar_regressor(B, dB) -> np.ndarray:
    """Scalar Tolles-Lawson regressor rows for ``(n, 3)`` field and derivative.

    Columns: ``Bhat`` (3), ``B_i Bhat_j`` for the upper triangle (6) and
    ``dB_j Bhat_i`` for all pairs with ``j`` outermost (9).
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    dB = np.atleast_2d(np.asarray(dB, dtype=float))
    norm = np.linalg.norm(B, axis=1)
    if np.any(norm == 0.0):
        raise ValueError("scalar regressor is undefined for a zero-norm field")
    Bhat = B / norm[:, None]
    induced = np.stack([B[:, i] * Bhat[:, j] for i, j in _INDUCED_PAIRS], axis=1)
    eddy = (dB[:, :, None] * Bhat[:, None, :]).reshape(-1, 9)
    return np.hstack([Bhat, induced, eddy])


def scalar_regressor_row(B, dB) -> np.ndarray:
    """Single-sample version of :func:`scalar_regressor` (length 18)."""
    return scalar_regressor(np.reshape(B, (1, 3)), np.reshape(dB, (1, 3)))[0]


def vector_regressor(B, dB) -> np.ndarray:
    """Stacked ``(3n, 21)`` vector regressor; rows ``3k..3k+2`` belong to sample k."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    dB = np.atleast_2d(np.asarray(dB, dtype=float))
    n = B.shape[0]
    A = np.zeros((n, 3, N_VECTOR))
    for i in range(3):
        A[:, i, i] = 1.0
        A[:, i, 3 + 3 * i:6 + 3 * i] = B
        A[:, i, 12 + 3 * i:15 + 3 * i] = dB
    return A.reshape(3 * n, N_VECTOR)


def vector_regressor_block(B, dB) -> np.ndarray:
    """3x21 regressor block for one proxy sample."""
    return vector_regressor(np.reshape(B, (1, 3)), np.reshape(dB, (1, 3)))


# Field statistics the generated scenarios are tuned to: mean |B_a| (nT),
# mean cos(angle(B_e, B_a)), nominal |B_a| range (nT).
SCENARIO_TARGETS = {
    "random": {"mean": 63.0, "cos": 0.27, "range": (40.0, 150.0)},
    "perpendicular-stress": {"mean": 700.0, "cos": 0.03, "range": (500.0, 1100.0)},
}

# relative rms weight of the permanent, induced and eddy blocks before tuning
_BLOCK_WEIGHTS = {
    "random": (1.0, 1.0, 0.2),
    "perpendicular-stress": (1.0, 0.3, 0.05),
}


def field_statistics(c: TlCoefficients, Be_b, dBe_b) -> dict:
    """Mean/min/max of ``|B_a|`` and mean ``cos(theta)`` along a flight."""
    Ba = platform_field(c, Be_b, dBe_b)
    mag = np.linalg.norm(Ba, axis=1)
    cos = np.sum(Ba * Be_b, axis=1) / (mag * np.linalg.norm(Be_b, axis=1))
    return {
        "mean": float(mag.mean()),
        "min": float(mag.min()),
        "max": float(mag.max()),
        "mean_cos": float(cos.mean()),
    }


def _rms(x):
    return np.sqrt(np.mean(np.sum(x * x, axis=1)))


def _mean_cos(Ba, Be_hat):
    return np.mean(np.sum(Ba * Be_hat, axis=1) / np.linalg.norm(Ba, axis=1))


def generate_scenario_coefficients(kind: str, seed: int, Be_b=None, dBe_b=None,
                                   max_attempts: int = 50,
                                   range_tolerance: float = 0.25) -> TlCoefficients:
    """Draw ground-truth coefficients for one of the two platform scenarios.

    Block entries are drawn uniformly in ``[-1, 1]``, each block is normalised
    to a fixed rms contribution, an isotropic induced term is added and tuned
    by bisection until the mean alignment hits the target, and the result is
    rescaled to the target mean magnitude. Draws whose magnitude range falls
    outside the nominal band (widened by ``range_tolerance``) are rejected.

    ``Be_b``/``dBe_b`` default to the background field along the default
    calibration flight generated with the same seed.
    """
    if kind not in SCENARIO_TARGETS:
        raise ValueError(f"unknown scenario kind {kind!r}; expected one of {sorted(SCENARIO_TARGETS)}")
    if Be_b is None or dBe_b is None:
        from .flight import background_along, gen_calibration_trajectory

        traj = gen_calibration_trajectory(seed=seed)
        Be_b, dBe_b = background_along(traj)
    Be_b = np.asarray(Be_b, dtype=float)
    dBe_b = np.asarray(dBe_b, dtype=float)
    Be_norm = np.linalg.norm(Be_b, axis=1)
    Be_hat = Be_b / Be_norm[:, None]
    target = SCENARIO_TARGETS[kind]
    wp, wn, we = _BLOCK_WEIGHTS[kind]
    lo, hi = target["range"]

    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        p0 = rng.uniform(-1.0, 1.0, 3)
        N0 = rng.uniform(-1.0, 1.0, (3, 3))
        E0 = rng.uniform(-1.0, 1.0, (3, 3))
        if kind == "perpendicular-stress":
            p0[1] = rng.choice([-1.0, 1.0]) * rng.uniform(4.0, 6.0)

        if kind == "perpendicular-stress":
            p0 = wp * p0
        else:
            p0 = wp * p0 / np.linalg.norm(p0)
        N0 = N0 * wn / _rms(Be_b @ N0.T)
        eddy = _rms(dBe_b @ E0.T)
        # without rotation the eddy block has no effect and is left at zero
        E0 = E0 * we / eddy if eddy > 0 else np.zeros((3, 3))
        base = p0 + Be_b @ N0.T + dBe_b @ E0.T

        span = 20.0 * _rms(base)
        f_lo = _mean_cos(base - span * Be_hat, Be_hat) - target["cos"]
        f_hi = _mean_cos(base + span * Be_hat, Be_hat) - target["cos"]
        if f_lo * f_hi > 0:
            continue
        a_lo, a_hi = -span, span
        for _ in range(200):
            a_mid = 0.5 * (a_lo + a_hi)
            f_mid = _mean_cos(base + a_mid * Be_hat, Be_hat) - target["cos"]
            if f_mid * f_lo > 0:
                a_lo, f_lo = a_mid, f_mid
            else:
                a_hi = a_mid
            if a_hi - a_lo < 1e-12 * span:
                break
        a = 0.5 * (a_lo + a_hi)

        # isotropic induced part a*Bhat = (a/|Be|) * I @ Be
        mean_be = float(Be_norm.mean())
        field = base + a * Be_hat
        scale = target["mean"] / np.mean(np.linalg.norm(field, axis=1))
        coeffs = TlCoefficients(
            scale * p0,
            scale * (N0 + (a / mean_be) * np.eye(3)),
            scale * E0,
        )
        stats = field_statistics(coeffs, Be_b, dBe_b)
        if (stats["min"] >= lo * (1 - range_tolerance)
                and stats["max"] <= hi * (1 + range_tolerance)
                and abs(stats["mean_cos"] - target["cos"]) < 0.02):
            return coeffs
    raise ScenarioGenerationError(
        f"could not meet {kind!r} scenario targets within {max_attempts} attempts"
    )
