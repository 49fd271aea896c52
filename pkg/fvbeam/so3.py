"""Rotation algebra on SO(3).

All functions accept a single vector ``(3,)`` / matrix ``(3, 3)`` or a stack of
them ``(..., 3)`` / ``(..., 3, 3)`` and return arrays of the matching shape.
Rotations are parametrised by rotation vectors. There is no
logarithm map: total rotation vectors are accumulated, never recovered from
matrices.
"""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np

from fvbeam.errors import RotationDomainError

SMALL_ANGLE = 1.0e-4
"""Below this angle the trigonometric coefficients use truncated Taylor series."""

Branch = Literal["taylor", "closed"]


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix ``S`` with ``S @ h == cross(v, h)``."""
    v = np.asarray(v, dtype=float)
    S = np.zeros(v.shape + (3,), dtype=float)
    S[..., 0, 1] = -v[..., 2]
    S[..., 0, 2] = v[..., 1]
    S[..., 1, 0] = v[..., 2]
    S[..., 1, 2] = -v[..., 0]
    S[..., 2, 0] = -v[..., 1]
    S[..., 2, 1] = v[..., 0]
    return S


def vee(S: np.ndarray) -> np.ndarray:
    """Axial vector of the skew part ``(S - S^T) / 2``."""
    S = np.asarray(S, dtype=float)
    A = 0.5 * (S - np.swapaxes(S, -1, -2))
    return np.stack([A[..., 2, 1], A[..., 0, 2], A[..., 1, 0]], axis=-1)


def norm(v: np.ndarray) -> np.ndarray:
    """Euclidean norm over the last axis."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(np.einsum("...i,...i->...", v, v))


def _coefficients(
    theta: np.ndarray, *, branch: Optional[Branch] = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``sin(t)/t``, ``(1 - cos t)/t^2`` and ``(1 - sin(t)/t)/t^2``.

    ``branch`` forces one evaluation route for positive angles (used to compare
    the two branches); by default the Taylor route is taken below
    :data:`SMALL_ANGLE`.
    """
    theta = np.asarray(theta, dtype=float)
    if branch is None:
        small = theta < SMALL_ANGLE
    else:
        small = np.full(theta.shape, branch == "taylor")
    small = small | (theta == 0.0)

    t2 = theta * theta
    safe = np.where(small, 1.0, theta)
    half = 0.5 * safe

    sinc = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(safe) / safe)
    # half-angle form of (1 - cos t)/t^2 keeps full precision near the threshold
    cosc = np.where(
        small,
        0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        0.5 * (np.sin(half) / half) ** 2,
    )
    sinc_rem = np.where(small, 1.0 / 6.0 - t2 / 120.0, (safe - np.sin(safe)) / safe**3)
    return sinc, cosc, sinc_rem


def exp_so3(psi: np.ndarray, *, branch: Optional[Branch] = None) -> np.ndarray:
    """Rodrigues exponential ``I + (sin t/t) S + ((1 - cos t)/t^2) S S``.

    Args:
        psi: Rotation vector(s), shape ``(..., 3)``.
        branch: Force the Taylor or closed-form coefficient route.

    Returns:
        Rotation matrices of shape ``(..., 3, 3)``.
    """
    psi = np.asarray(psi, dtype=float)
    sinc, cosc, _ = _coefficients(norm(psi), branch=branch)
    S = hat(psi)
    return (
        np.eye(3)
        + sinc[..., None, None] * S
        + cosc[..., None, None] * (S @ S)
    )


def tangent(psi: np.ndarray, *, branch: Optional[Branch] = None) -> np.ndarray:
    """Tangent operator of the exponential map.

    ``T = (sin t/t) I + ((1 - sin t/t)/t^2) psi psi^T + ((1 - cos t)/t^2) hat(psi)``

    Raises:
        RotationDomainError: If any ``|psi| >= pi``.
    """
    psi = np.asarray(psi, dtype=float)
    theta = norm(psi)
    if np.any(theta >= np.pi):
        raise RotationDomainError(float(np.max(theta)))
    sinc, cosc, sinc_rem = _coefficients(theta, branch=branch)
    outer = psi[..., :, None] * psi[..., None, :]
    return (
        sinc[..., None, None] * np.eye(3)
        + sinc_rem[..., None, None] * outer
        + cosc[..., None, None] * hat(psi)
    )


def rotation_drift(R: np.ndarray) -> float:
    """Largest Frobenius gap of ``R^T R`` to the identity, or of ``det R`` to one."""
    R = np.asarray(R, dtype=float)
    gram = np.swapaxes(R, -1, -2) @ R - np.eye(3)
    drift = np.sqrt(np.einsum("...ij,...ij->...", gram, gram))
    det = np.linalg.det(R)
    return float(max(np.max(drift), np.max(np.abs(det - 1.0))))


def is_rotation(R: np.ndarray, tol: float = 1.0e-12) -> bool:
    """True when every matrix in ``R`` is proper orthogonal within ``tol``."""
    return rotation_drift(R) <= tol
