"""Reference frames and rotation helpers.

Attitudes use the aerospace Z-Y-X (yaw, pitch, roll) convention. A rotation
matrix ``R_eb`` maps body-frame vectors into the Earth (NED) frame, so body
quantities are obtained with ``R_eb.T @ v_e``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EulerAttitude:
    """Roll, pitch and yaw in radians."""

    roll: float
    pitch: float
    yaw: float

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw], dtype=float)


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_rotation(att) -> np.ndarray:
    """Body-to-Earth rotation ``R_eb = Rz(yaw) Ry(pitch) Rx(roll)``.

    ``att`` may be an :class:`EulerAttitude`, a ``(3,)`` array of
    ``(roll, pitch, yaw)`` or an ``(n, 3)`` array, in which case an
    ``(n, 3, 3)`` stack is returned.
    """
    if isinstance(att, EulerAttitude):
        att = att.as_array()
    att = np.asarray(att, dtype=float)
    if not np.all(np.isfinite(att)):
        raise ValueError("attitude angles must be finite")
    single = att.ndim == 1
    att = np.atleast_2d(att)
    roll, pitch, yaw = att[:, 0], att[:, 1], att[:, 2]
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)

    R = np.empty((att.shape[0], 3, 3))
    R[:, 0, 0] = cy * cp
    R[:, 0, 1] = cy * sp * sr - sy * cr
    R[:, 0, 2] = cy * sp * cr + sy * sr
    R[:, 1, 0] = sy * cp
    R[:, 1, 1] = sy * sp * sr + cy * cr
    R[:, 1, 2] = sy * sp * cr - cy * sr
    R[:, 2, 0] = -sp
    R[:, 2, 1] = cp * sr
    R[:, 2, 2] = cp * cr
    return R[0] if single else R


def euler_rates_to_rotation_rate(att, rates) -> np.ndarray:
    """Time derivative of ``R_eb`` given Euler angles and their rates.

    Both arguments are ``(n, 3)`` arrays ordered ``(roll, pitch, yaw)``.
    """
    att = np.atleast_2d(np.asarray(att, dtype=float))
    rates = np.atleast_2d(np.asarray(rates, dtype=float))
    roll, pitch, yaw = att.T
    dr, dp, dy = rates.T
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    n = att.shape[0]

    def stack(rows):
        return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)

    zero = np.zeros(n)
    # Rz, Ry, Rx and their derivatives w.r.t. their own angle
    Rz = stack([[cy, -sy, zero], [sy, cy, zero], [zero, zero, zero + 1]])
    dRz = stack([[-sy, -cy, zero], [cy, -sy, zero], [zero, zero, zero]])
    Ry = stack([[cp, zero, sp], [zero, zero + 1, zero], [-sp, zero, cp]])
    dRy = stack([[-sp, zero, cp], [zero, zero, zero], [-cp, zero, -sp]])
    Rx = stack([[zero + 1, zero, zero], [zero, cr, -sr], [zero, sr, cr]])
    dRx = stack([[zero, zero, zero], [zero, -sr, -cr], [zero, cr, -sr]])

    dR = (
        dy[:, None, None] * dRz @ Ry @ Rx
        + dp[:, None, None] * Rz @ dRy @ Rx
        + dr[:, None, None] * Rz @ Ry @ dRx
    )
    return dR


def rotation_to_euler(R) -> np.ndarray:
    """Inverse of :func:`euler_to_rotation`; returns ``(roll, pitch, yaw)``."""
    R = np.asarray(R, dtype=float)
    single = R.ndim == 2
    R = R.reshape(-1, 3, 3)
    roll = np.arctan2(R[:, 2, 1], R[:, 2, 2])
    pitch = -np.arcsin(np.clip(R[:, 2, 0], -1.0, 1.0))
    yaw = np.arctan2(R[:, 1, 0], R[:, 0, 0])
    out = np.stack([roll, pitch, yaw], axis=-1)
    return out[0] if single else out


def rotate_to_body(R_eb, v_e) -> np.ndarray:
    """Express an Earth-frame vector in the body frame, ``R_eb.T @ v_e``.

    Works on single matrices or on ``(n, 3, 3)`` stacks, with ``v_e`` either
    one vector or one vector per matrix.
    """
    R_eb = np.asarray(R_eb, dtype=float)
    v_e = np.asarray(v_e, dtype=float)
    if R_eb.ndim == 2:
        return R_eb.T @ v_e
    return np.einsum("nji,nj->ni", R_eb, np.broadcast_to(v_e, (R_eb.shape[0], 3)))


def skew(v) -> np.ndarray:
    """Cross-product matrix ``[v]x``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def angle_between(u, v) -> float:
    """Angle in ``[0, pi]`` between two non-zero vectors.

    Uses ``atan2(|u x v|, u . v)``, which stays accurate near 0 and pi where
    the arccos form loses precision. Accepts ``(..., 3)`` arrays.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(np.linalg.norm(u, axis=-1) == 0.0) or np.any(np.linalg.norm(v, axis=-1) == 0.0):
        raise ValueError("angle_between is undefined for zero-length vectors")
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.arctan2(cross, dot)
