"""Tolles-Lawson regression for the scalar and vector models.

The background field in the body frame appears in both the regression target
and the regressor and has to be approximated from one of three sources:
ground truth (``perfect``), the direction of the vector magnetometer scaled to
the model magnitude (``vector-magnetometer``), or the background model rotated
with the INS attitude (``ins``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, signal

from .tolles_lawson import N_SCALAR, N_VECTOR, TlCoefficients, scalar_regressor, vector_regressor


class EstimationError(RuntimeError):
    """Regressor is rank deficient; carries the condition number."""

    def __init__(self, message, condition_number=np.inf):
        super().__init__(message)
        self.condition_number = condition_number


class AttitudeSource(str, enum.Enum):
    PERFECT = "perfect"
    VECTOR_MAGNETOMETER = "vector-magnetometer"
    INS = "ins"
    BANDPASS = "bandpass"  # filtered scalar target; not supported


class Model(str, enum.Enum):
    SCALAR = "scalar-1d"
    VECTOR = "vector-3d"


@dataclass(frozen=True)
class CalibrationOptions:
    """Regression settings.

    ``derivative`` selects how the proxy derivative is obtained: ``"auto"``
    uses the exact derivative for the perfect source and filtered numerical
    differentiation otherwise. ``regressor_norm="measured"`` scales the INS
    proxy direction with the measured scalar instead of the model magnitude.
    """

    derivative_cutoff: float | None = 1.0
    derivative: str = "auto"
    Be_model_e: np.ndarray | None = None
    regressor_norm: str = "model"
    exclude_invalid: bool = True
    ill_conditioned_threshold: float = 1e8
    rank_threshold: float = 1e12


@dataclass(frozen=True)
class ResidualStats:
    mean: float
    std: float
    max: float
    count: int

    @classmethod
    def of(cls, residual, mask=None) -> "ResidualStats":
        r = np.asarray(residual, dtype=float)
        if mask is not None:
            r = r[mask]
        return cls(float(r.mean()), float(r.std()), float(r.max()), int(r.size))

    def to_json(self) -> dict:
        return {"mean": self.mean, "std": self.std, "max": self.max, "count": self.count}


@dataclass
class CalibrationResult:
    model: Model
    source: AttitudeSource
    coefficients: np.ndarray
    condition_number: float
    ill_conditioned: bool
    dropped_samples: int
    calibration: ResidualStats | None = None
    validation: ResidualStats | None = None
    options: CalibrationOptions = field(default_factory=CalibrationOptions)

    def tl_coefficients(self) -> TlCoefficients:
        """Full coefficient set; only available for the vector model."""
        if self.model is not Model.VECTOR:
            raise ValueError("the scalar model only identifies reduced induced terms")
        return TlCoefficients.from_vector(self.coefficients)

    def to_json(self) -> dict:
        return {
            "model": self.model.value,
            "source": self.source.value,
            "coefficients": self.coefficients.tolist(),
            "condition_number": self.condition_number,
            "ill_conditioned": self.ill_conditioned,
            "dropped_samples": self.dropped_samples,
            "calibration": None if self.calibration is None else self.calibration.to_json(),
            "validation": None if self.validation is None else self.validation.to_json(),
        }


def filtered_derivative(series, f_s: float, cutoff: float | None = 1.0) -> np.ndarray:
    """Forward-difference derivative after a zero-phase low-pass.

    The low-pass is a second-order Butterworth run forward and backward;
    ``cutoff`` of ``None`` or ``inf`` skips it. The last sample repeats the
    previous difference.
    """
    x = np.asarray(series, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("need at least two samples to differentiate")
    if cutoff is not None and np.isfinite(cutoff):
        if not 0 < cutoff < f_s / 2:
            raise ValueError("cutoff must lie between 0 and the Nyquist frequency")
        sos = signal.butter(2, cutoff, fs=f_s, output="sos")
        x = signal.sosfiltfilt(sos, x, axis=0)
    d = np.empty_like(x)
    d[:-1] = (x[1:] - x[:-1]) * f_s
    d[-1] = d[-2]
    return d


def _source(src) -> AttitudeSource:
    src = AttitudeSource(src)
    if src is AttitudeSource.BANDPASS:
        raise ValueError("bandpass-filtered targets are out of scope; use perfect, "
                         "vector-magnetometer or ins")
    return src


def build_be_proxy(signals, measurements, src, opts: CalibrationOptions = CalibrationOptions()):
    """Body-frame background proxy and a per-sample validity mask."""
    src = _source(src)
    n = len(signals.t)
    valid = np.ones(n, dtype=bool)
    Be_model_e = signals.Be_e if opts.Be_model_e is None else np.asarray(opts.Be_model_e, dtype=float)
    magnitude = float(np.linalg.norm(Be_model_e))
    if src is AttitudeSource.PERFECT:
        return np.array(signals.Be_b, dtype=float), valid
    if src is AttitudeSource.VECTOR_MAGNETOMETER:
        v = np.asarray(measurements.vector, dtype=float)
        norm = np.linalg.norm(v, axis=1)
        valid = norm > 0
        safe = np.where(valid, norm, 1.0)
        return magnitude * v / safe[:, None], valid
    proxy = np.einsum("nji,j->ni", signals.R_hat_eb, Be_model_e)
    if opts.regressor_norm == "measured":
        proxy = proxy / magnitude * np.asarray(measurements.scalar)[:, None]
    return proxy, valid


def _proxy_derivative(signals, proxy, src, opts):
    mode = opts.derivative
    if mode == "auto":
        mode = "analytic" if src is AttitudeSource.PERFECT else "numeric"
    if mode == "analytic":
        if src is not AttitudeSource.PERFECT:
            raise ValueError("an exact derivative is only available for the perfect source")
        return np.array(signals.dBe_b, dtype=float)
    if mode != "numeric":
        raise ValueError(f"unknown derivative mode {opts.derivative!r}")
    return filtered_derivative(proxy, signals.fs, opts.derivative_cutoff)


def lstsq_qr(A, y, rank_threshold: float = 1e12):
    """Least squares through a QR factorisation of the column-equilibrated regressor.

    Returns the solution and the condition number of the equilibrated matrix.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.shape[0] < A.shape[1]:
        raise EstimationError(f"{A.shape[0]} rows cannot determine {A.shape[1]} coefficients")
    col = np.linalg.norm(A, axis=0)
    if np.any(col == 0):
        raise EstimationError("regressor has an all-zero column")
    Q, R = np.linalg.qr(A / col, mode="reduced")
    sv = np.linalg.svd(R, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if not cond < rank_threshold:
        raise EstimationError(f"regressor is rank deficient (condition number {cond:.3g})", cond)
    x = linalg.solve_triangular(R, Q.T @ y)
    return x / col, cond


def _design(model, signals, measurements, src, opts):
    proxy, valid = build_be_proxy(signals, measurements, src, opts)
    dproxy = _proxy_derivative(signals, proxy, src, opts)
    if opts.exclude_invalid and measurements.valid is not None:
        valid = valid & measurements.valid
    if model is Model.SCALAR:
        Be_model_e = signals.Be_e if opts.Be_model_e is None else opts.Be_model_e
        safe = np.where(valid[:, None], proxy, 1.0)
        A = scalar_regressor(safe, dproxy)
        y = np.asarray(measurements.scalar, dtype=float) - np.linalg.norm(Be_model_e)
        return A, y, valid, proxy
    A = vector_regressor(proxy, dproxy)
    y = (np.asarray(measurements.vector, dtype=float) - proxy).ravel()
    return A, y, valid, proxy


# With a constant-magnitude proxy, B . dB/dt = 0 makes the three diagonal
# eddy columns of the scalar regressor sum to zero; the last one is dropped
# and its coefficient reported as 0.
_SCALAR_DEPENDENT_COLUMN = N_SCALAR - 1


def _constant_magnitude(proxy, valid):
    mag = np.linalg.norm(proxy[valid], axis=1)
    return mag.size > 0 and np.ptp(mag) <= 1e-9 * mag.max()


def _fit(model, signals, measurements, src, opts):
    src = _source(src)
    A, y, valid, proxy = _design(model, signals, measurements, src, opts)
    rows = valid if model is Model.SCALAR else np.repeat(valid, 3)
    keep = np.ones(A.shape[1], dtype=bool)
    if model is Model.SCALAR and _constant_magnitude(proxy, valid):
        keep[_SCALAR_DEPENDENT_COLUMN] = False
    x = np.zeros(A.shape[1])
    x[keep], cond = lstsq_qr(A[rows][:, keep], y[rows], opts.rank_threshold)
    result = CalibrationResult(
        model=model, source=src, coefficients=x, condition_number=cond,
        ill_conditioned=cond > opts.ill_conditioned_threshold,
        dropped_samples=int(np.sum(~valid)), options=opts,
    )
    result.calibration = compensate(signals, measurements, result)[2]
    return result


def fit_scalar(signals, measurements, src, opts: CalibrationOptions = CalibrationOptions()) -> CalibrationResult:
    """Fit the 18-term scalar model to ``scalar - |B_e,model|``."""
    return _fit(Model.SCALAR, signals, measurements, src, opts)


def fit_vector(signals, measurements, src, opts: CalibrationOptions = CalibrationOptions()) -> CalibrationResult:
    """Fit the 21-term vector model to ``vector - proxy``."""
    return _fit(Model.VECTOR, signals, measurements, src, opts)


def compensate(signals, measurements, result: CalibrationResult):
    """Remove the fitted platform field and score against the true background.

    Returns ``(Be_estimate, residual, stats)``. For the scalar model the
    estimate is a magnitude and the residual is its absolute error; for the
    vector model the residual is the norm of the vector error.
    """
    expected = N_SCALAR if result.model is Model.SCALAR else N_VECTOR
    if result.coefficients.shape != (expected,):
        raise ValueError(
            f"{result.model.value} needs {expected} coefficients, got {result.coefficients.shape}"
        )
    opts = result.options
    A, _, valid, _ = _design(result.model, signals, measurements, result.source, opts)
    fitted = A @ result.coefficients
    if result.model is Model.SCALAR:
        estimate = np.asarray(measurements.scalar, dtype=float) - fitted
        residual = np.abs(estimate - np.linalg.norm(signals.Be_b, axis=1))
    else:
        estimate = np.asarray(measurements.vector, dtype=float) - fitted.reshape(-1, 3)
        residual = np.linalg.norm(estimate - signals.Be_b, axis=1)
    return estimate, residual, ResidualStats.of(residual, valid)


def calibrate_and_validate(model, src, cal_signals, cal_meas, val_signals, val_meas,
                           opts: CalibrationOptions = CalibrationOptions()) -> CalibrationResult:
    """Fit on the calibration flight and attach validation statistics."""
    model = Model(model)
    result = _fit(model, cal_signals, cal_meas, src, opts)
    result.validation = compensate(val_signals, val_meas, result)[2]
    return result


def residual_to_csv(t, residual, path, valid=None) -> None:
    valid = np.ones(len(t), dtype=bool) if valid is None else valid
    np.savetxt(path, np.column_stack([t, residual, valid.astype(int)]), delimiter=",",
               header="t,residual_nt,valid", comments="", fmt="%.10g")
