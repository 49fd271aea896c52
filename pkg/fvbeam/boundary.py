"""End conditions: Dirichlet/Neumann treatment of the two boundary faces.

Every end face is described for one Newton iteration by an affine map

    [dw_b; dpsi_b] = G [dw_C; dpsi_C] + g

in terms of the increments of the adjacent cell ``C``. Prescribed components
are fixed rows of the map; load-controlled components come from solving the
linearised face flux for the boundary value that reproduces the applied load.
The same map feeds the boundary row of the block system and, after the solve,
the recovery of the boundary-face kinematics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from fvbeam.errors import BoundarySingularError
from fvbeam.so3 import hat

if TYPE_CHECKING:
    from fvbeam.assembly import BlockRow, CoefficientSet
    from fvbeam.state import BeamState

logger = logging.getLogger(__name__)

EndKind = Literal["clamped", "hinged", "free", "prescribed"]
End = Literal["west", "east"]
Vec3 = tuple[float, float, float]

_ZERO: Vec3 = (0.0, 0.0, 0.0)


def end_sign(end: End) -> float:
    """Orientation sign of an end face: -1 west, +1 east."""
    return -1.0 if end == "west" else 1.0


def end_index(end: End) -> int:
    return 0 if end == "west" else -1


class BoundarySpec(BaseModel):
    """Support and loading of one beam end.

    Prescribed motions and applied loads are totals at load factor 1 and are
    scaled by the current load factor. Loads are fixed in the global frame.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: EndKind
    displacement: Optional[Vec3] = None
    rotation: Optional[Vec3] = None
    force: Vec3 = _ZERO
    moment: Vec3 = _ZERO

    @model_validator(mode="after")
    def _consistent(self) -> "BoundarySpec":
        if self.kind in ("clamped", "hinged", "free"):
            if self.displacement is not None or self.rotation is not None:
                raise ValueError(f"a {self.kind} end takes no prescribed displacement or rotation")
        if self.kind == "prescribed" and self.displacement is None and self.rotation is None:
            raise ValueError("a prescribed end needs a displacement and/or a rotation")
        if self.translation_fixed and any(self.force):
            raise ValueError("force cannot be applied where the displacement is prescribed")
        if self.rotation_fixed and any(self.moment):
            raise ValueError("moment cannot be applied where the rotation is prescribed")
        return self

    @property
    def translation_fixed(self) -> bool:
        if self.kind in ("clamped", "hinged"):
            return True
        return self.kind == "prescribed" and self.displacement is not None

    @property
    def rotation_fixed(self) -> bool:
        if self.kind == "clamped":
            return True
        return self.kind == "prescribed" and self.rotation is not None


@dataclass(frozen=True)
class EndCondition:
    """An end specification resolved for one Newton iteration.

    ``dw`` and ``dpsi`` are the Dirichlet increments still to be imposed;
    ``force`` and ``moment`` are the applied loads at the current load factor.
    """

    end: End
    translation_fixed: bool
    rotation_fixed: bool
    dw: np.ndarray
    dpsi: np.ndarray
    force: np.ndarray
    moment: np.ndarray

    @property
    def sign(self) -> float:
        return end_sign(self.end)


def resolve_end(spec: BoundarySpec, end: End, load_factor: float, state: "BeamState") -> EndCondition:
    """Turn ramp targets into increments relative to the accumulated end values.

    The displacement increment is ``target - w_b``. The rotation increment is
    chosen so that the accumulated rotation vector of the end face lands on
    the target, ``dpsi = Lambda_b (target - psi_b)``.
    """
    idx = end_index(end)
    lam = float(load_factor)
    dw = np.zeros(3)
    dpsi = np.zeros(3)
    if spec.translation_fixed:
        target = lam * np.asarray(spec.displacement or _ZERO, dtype=float)
        dw = target - state.w_f[idx]
    if spec.rotation_fixed:
        target = lam * np.asarray(spec.rotation or _ZERO, dtype=float)
        dpsi = state.Lambda_f[idx] @ (target - state.psi_f[idx])
    return EndCondition(
        end=end,
        translation_fixed=spec.translation_fixed,
        rotation_fixed=spec.rotation_fixed,
        dw=dw,
        dpsi=dpsi,
        force=lam * np.asarray(spec.force, dtype=float),
        moment=lam * np.asarray(spec.moment, dtype=float),
    )


@dataclass(frozen=True)
class BoundaryMap:
    """Affine map from adjacent-cell increments to end-face increments."""

    end: End
    G: np.ndarray
    g: np.ndarray

    def apply(self, dw_c: np.ndarray, dpsi_c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = self.G @ np.concatenate([dw_c, dpsi_c]) + self.g
        return x[:3], x[3:]


def _solve(end: End, A: np.ndarray, B: np.ndarray, what: str) -> np.ndarray:
    try:
        X = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise BoundarySingularError(end, what) from exc
    if not np.all(np.isfinite(X)):
        raise BoundarySingularError(end, what)
    return X


def boundary_increment_map(face: "CoefficientSet", cond: EndCondition, dxb: float) -> BoundaryMap:
    """Build the end-face map from the coefficients evaluated at that face.

    Rotation rows come first: a prescribed increment, or the moment recovery

        (C_mpsi + s C_mpsi2 / dxb) dpsi_b = s mbar - m* + s C_mpsi2 dpsi_C / dxb

    Translation rows then use the rotation rows: a prescribed increment, or

        dw_b = dw_C + s dxb C_ww^-1 (s nbar - n* - C_wpsi dpsi_b)

    with ``s`` the face orientation sign.

    Raises:
        BoundarySingularError: If a recovery matrix cannot be inverted.
    """
    s = cond.sign
    G = np.zeros((6, 6))
    g = np.zeros(6)

    if cond.rotation_fixed:
        g[3:] = cond.dpsi
    else:
        lhs = face.C_mpsi + s * face.C_mpsi2 / dxb
        rhs = np.column_stack([s * face.C_mpsi2 / dxb, s * cond.moment - face.C_expm])
        sol = _solve(cond.end, lhs, rhs, "moment recovery")
        G[3:, 3:] = sol[:, :3]
        g[3:] = sol[:, 3]

    if cond.translation_fixed:
        g[:3] = cond.dw
    else:
        compliance = s * dxb * _solve(cond.end, face.C_ww, np.eye(3), "force recovery")
        G[:3, :3] = np.eye(3)
        G[:3, :] -= compliance @ face.C_wpsi @ G[3:, :]
        g[:3] = compliance @ (s * cond.force - face.C_expw - face.C_wpsi @ g[3:])

    return BoundaryMap(end=cond.end, G=G, g=g)


def recover_boundary_kinematics(
    bmap: BoundaryMap, dw_c: np.ndarray, dpsi_c: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """End-face increments ``(dw_b, dpsi_b)`` from the adjacent-cell solution."""
    return bmap.apply(np.asarray(dw_c, dtype=float), np.asarray(dpsi_c, dtype=float))


@dataclass(frozen=True)
class FaceLinearisation:
    """Stored flux and its linearisation at one end face.

    ``F_der``/``F_val`` map face derivatives/values of ``[dw; dpsi]`` to the
    flux ``[n; m]``; ``A_der``/``A_val`` do the same for the moment arm
    ``r' x n``.
    """

    flux: np.ndarray
    arm: np.ndarray
    rprime: np.ndarray
    F_der: np.ndarray
    F_val: np.ndarray
    A_der: np.ndarray
    A_val: np.ndarray


def _chain(bmap: BoundaryMap, sign: float, dxb: float, der: np.ndarray, val: np.ndarray):
    """Compose a face linearisation with the boundary map.

    The end-face derivative is ``s (x_b - x_C) / dxb``.
    """
    eye = np.eye(6)
    P = sign * der @ (bmap.G - eye) / dxb + val @ bmap.G
    p = sign * der @ bmap.g / dxb + val @ bmap.g
    return P, p


def apply_dirichlet(
    row: "BlockRow",
    cond: EndCondition,
    bmap: BoundaryMap,
    face: FaceLinearisation,
    *,
    dxb: float,
    arm_weight: float,
) -> "BlockRow":
    """Add the implicit end-face flux of the prescribed components to ``row``.

    A prescribed translation keeps the force flux (and the moment arm) implicit;
    a prescribed rotation keeps the moment flux implicit. Their boundary values
    enter through ``bmap``, and its constant part moves to the right-hand side.
    """
    s = cond.sign
    A_C = row.A_C.copy()
    R = row.R.copy()
    P, p = _chain(bmap, s, dxb, face.F_der, face.F_val)
    if cond.translation_fixed:
        A_C[:3] += s * P[:3]
        R[:3] -= s * (face.flux[:3] + p[:3])
        Q, q = _chain(bmap, s, dxb, face.A_der, face.A_val)
        A_C[3:] += arm_weight * Q
        R[3:] -= arm_weight * (face.arm + q)
    if cond.rotation_fixed:
        A_C[3:] += s * P[3:]
        R[3:] -= s * (face.flux[3:] + p[3:])
    return replace(row, A_C=A_C, R=R)


def apply_neumann(
    row: "BlockRow",
    cond: EndCondition,
    bmap: BoundaryMap,
    face: FaceLinearisation,
    *,
    dxb: float,
    arm_weight: float,
) -> "BlockRow":
    """Replace the end-face flux of the load-controlled components by the applied load.

    The face flux equals ``s * nbar`` (``s * mbar``), so the balance of the
    boundary cell gains exactly ``nbar`` (``mbar``) and no face coefficients.
    With a free translation the moment arm ``r'_b x (s nbar)`` stays, linear in
    the recovered end displacement.
    """
    s = cond.sign
    A_C = row.A_C.copy()
    R = row.R.copy()
    if not cond.translation_fixed:
        n_t = s * cond.force
        R[:3] -= cond.force
        slope = -hat(n_t)
        dprime_G = s * (bmap.G[:3] - np.eye(6)[:3]) / dxb
        dprime_g = s * bmap.g[:3] / dxb
        A_C[3:] += arm_weight * slope @ dprime_G
        R[3:] -= arm_weight * (np.cross(face.rprime, n_t) + slope @ dprime_g)
    if not cond.rotation_fixed:
        R[3:] -= cond.moment
    return replace(row, A_C=A_C, R=R)


def apply_boundary(
    row: "BlockRow",
    cond: EndCondition,
    bmap: BoundaryMap,
    face: FaceLinearisation,
    *,
    dxb: float,
    arm_weight: float,
) -> "BlockRow":
    """Close a boundary cell's row with both end-face treatments."""
    row = apply_dirichlet(row, cond, bmap, face, dxb=dxb, arm_weight=arm_weight)
    return apply_neumann(row, cond, bmap, face, dxb=dxb, arm_weight=arm_weight)


def explicit_end_terms(
    cond: EndCondition, flux: np.ndarray, arm: np.ndarray, rprime: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """End-face flux and moment arm as they enter the cell balance (no linear terms)."""
    s = cond.sign
    flux = np.array(flux, dtype=float, copy=True)
    arm = np.array(arm, dtype=float, copy=True)
    if not cond.translation_fixed:
        flux[:3] = s * cond.force
        arm = np.cross(rprime, s * cond.force)
    if not cond.rotation_fixed:
        flux[3:] = s * cond.moment
    return flux, arm
