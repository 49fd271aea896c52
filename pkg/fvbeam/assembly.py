"""Linearised coefficients and assembly of the block-tridiagonal Newton system.

Per cell ``C`` the discrete balance reads

    n_e - n_w + f_C L_C = 0
    m_e - m_w + L_e/2 (r'_e x n_e) + L_w/2 (r'_w x n_w) + t_C L_C = 0

and is linearised in the cell increments ``[dw; dpsi]``. Unknowns are ordered
``[dw; dpsi]`` per cell; the right-hand side is the negated explicit balance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from typing import Literal, Optional

import numpy as np

from fvbeam import boundary
from fvbeam.boundary import BoundaryMap, EndCondition, FaceLinearisation
from fvbeam.geometry import BeamMesh, InitialGeometry
from fvbeam.so3 import hat
from fvbeam.state import BeamState, Material

logger = logging.getLogger(__name__)

Location = Literal["cell", "face"]
JacobianMode = Literal["face", "interpolated"]


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of the linearised resultants at cells or faces.

    Vectors are ``(N, 3)`` and matrices ``(N, 3, 3)``:

    * ``C_expw = n*``, ``C_ww = Lt C_N Lt^T``, ``C_wpsi = C_ww hat(r') - hat(n*)``
    * ``C_expm = m*``, ``C_mpsi = -hat(m*)``, ``C_mpsi2 = Lt C_M Lt^T``
    * ``C_expmw = r' x n*``, ``C_mw = hat(r') C_ww - hat(n*)``,
      ``C_mwpsi = hat(r') C_ww hat(r') - hat(r') hat(n*)``
    """

    location: str
    C_expw: np.ndarray
    C_ww: np.ndarray
    C_wpsi: np.ndarray
    C_expm: np.ndarray
    C_mpsi: np.ndarray
    C_mpsi2: np.ndarray
    C_expmw: np.ndarray
    C_mw: np.ndarray
    C_mwpsi: np.ndarray
    rprime: np.ndarray

    def at(self, index: int) -> "CoefficientSet":
        """Single-point view (arrays lose their leading axis)."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        return CoefficientSet(
            **{k: (v if k == "location" else v[index]) for k, v in values.items()}
        )


def _coefficients(location: str, Lam_t: np.ndarray, rprime: np.ndarray, n: np.ndarray, m: np.ndarray, mat: Material) -> CoefficientSet:
    Lt_T = np.swapaxes(Lam_t, -1, -2)
    C_ww = Lam_t @ mat.C_N @ Lt_T
    C_mpsi2 = Lam_t @ mat.C_M @ Lt_T
    R_hat = hat(rprime)
    n_hat = hat(n)
    C_wpsi = C_ww @ R_hat - n_hat
    return CoefficientSet(
        location=location,
        C_expw=n,
        C_ww=C_ww,
        C_wpsi=C_wpsi,
        C_expm=m,
        C_mpsi=-hat(m),
        C_mpsi2=C_mpsi2,
        C_expmw=np.cross(rprime, n),
        C_mw=R_hat @ C_ww - n_hat,
        C_mwpsi=R_hat @ C_wpsi,
        rprime=rprime,
    )


def compute_coefficients(
    state: BeamState,
    geom: InitialGeometry,
    mesh: BeamMesh,
    mat: Material,
    location: Location = "cell",
) -> CoefficientSet:
    """Evaluate the coefficient set at cell centres or at faces.

    At cell centres the total rotation is ``Lambda_c Lambda0_c`` and the strains
    and tangent are the means of the two adjacent face values. At faces the
    stored face fields are used directly.
    """
    if location == "face":
        Lam_t = state.Lambda_f @ geom.Lambda0_f
        return _coefficients("face", Lam_t, state.rprime_f, state.n_f, state.m_f, mat)
    if location != "cell":
        raise ValueError(f"location must be 'cell' or 'face', got '{location}'")

    Lam_t = state.Lambda_c @ geom.Lambda0_c
    Gamma = 0.5 * (state.Gamma_f[:-1] + state.Gamma_f[1:])
    K = 0.5 * (state.K_f[:-1] + state.K_f[1:])
    rprime = 0.5 * (state.rprime_f[:-1] + state.rprime_f[1:])
    n = np.einsum("nij,nj->ni", Lam_t, Gamma @ mat.C_N.T)
    m = np.einsum("nij,nj->ni", Lam_t, K @ mat.C_M.T)
    return _coefficients("cell", Lam_t, rprime, n, m, mat)


_IMPLICIT = ("C_ww", "C_wpsi", "C_mpsi", "C_mpsi2", "C_mw", "C_mwpsi")


def interpolate_to_faces(cell: CoefficientSet, face: CoefficientSet, mesh: BeamMesh) -> CoefficientSet:
    """Face coefficients with the implicit matrices gamma-interpolated from cell centres.

    ``X_f = gamma_w X_W + (1 - gamma_w) X_C`` on interior faces; end faces and
    the explicit terms keep their face values.
    """
    values = {f.name: np.array(getattr(face, f.name), copy=True) for f in fields(face) if f.name != "location"}
    g = mesh.gamma_w[1:, None, None]
    for name in _IMPLICIT:
        cv = getattr(cell, name)
        values[name][1:-1] = g * cv[:-1] + (1.0 - g) * cv[1:]
    return CoefficientSet(location="face", **values)


@dataclass(frozen=True)
class FluxMaps:
    """Per-face linear maps of the flux ``[n; m]`` and the arm ``r' x n``.

    ``*_der`` act on the face derivative of ``[dw; dpsi]``, ``*_val`` on its
    face value.
    """

    F_der: np.ndarray
    F_val: np.ndarray
    A_der: np.ndarray
    A_val: np.ndarray


def flux_maps(coeffs: CoefficientSet) -> FluxMaps:
    n = coeffs.C_ww.shape[0]
    F_der = np.zeros((n, 6, 6))
    F_val = np.zeros((n, 6, 6))
    A_der = np.zeros((n, 3, 6))
    A_val = np.zeros((n, 3, 6))
    F_der[:, :3, :3] = coeffs.C_ww
    F_der[:, 3:, 3:] = coeffs.C_mpsi2
    F_val[:, :3, 3:] = coeffs.C_wpsi
    F_val[:, 3:, 3:] = coeffs.C_mpsi
    A_der[:, :, :3] = coeffs.C_mw
    A_val[:, :, 3:] = coeffs.C_mwpsi
    return FluxMaps(F_der=F_der, F_val=F_val, A_der=A_der, A_val=A_val)


def _face_jacobians(maps: FluxMaps, mesh: BeamMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Derivatives of every face flux/arm w.r.t. the cells to its left and right."""
    h = mesh.cell_length
    gamma = np.empty(mesh.n_faces)
    gamma[1:-1] = mesh.gamma_w[1:]
    gamma[0] = gamma[-1] = 0.5
    g6 = gamma[:, None, None]
    dF_left = g6 * maps.F_val - maps.F_der / h
    dF_right = (1.0 - g6) * maps.F_val + maps.F_der / h
    dA_left = g6 * maps.A_val - maps.A_der / h
    dA_right = (1.0 - g6) * maps.A_val + maps.A_der / h
    return dF_left, dF_right, dA_left, dA_right


@dataclass(frozen=True)
class LoadSet:
    """Distributed force ``f`` (N/m) and torque ``t`` (N m/m) per cell."""

    f_c: np.ndarray
    t_c: np.ndarray

    @classmethod
    def zeros(cls, mesh: BeamMesh) -> "LoadSet":
        return cls(f_c=np.zeros((mesh.n_cells, 3)), t_c=np.zeros((mesh.n_cells, 3)))

    def scaled(self, factor: float) -> "LoadSet":
        return LoadSet(f_c=factor * self.f_c, t_c=factor * self.t_c)


@dataclass(frozen=True)
class StencilRow:
    """Three balance rows of one cell: columns ``[W | C | E]`` of ``[dw; dpsi]``."""

    stencil: np.ndarray
    rhs: np.ndarray


@dataclass(frozen=True)
class BlockRow:
    A_W: np.ndarray
    A_C: np.ndarray
    A_E: np.ndarray
    R: np.ndarray

    @classmethod
    def from_rows(cls, force: StencilRow, moment: StencilRow) -> "BlockRow":
        S = np.vstack([force.stencil, moment.stencil])
        return cls(A_W=S[:, :6], A_C=S[:, 6:12], A_E=S[:, 12:], R=np.concatenate([force.rhs, moment.rhs]))


@dataclass(frozen=True)
class BlockTridiagonalSystem:
    """``A_W[i] x[i-1] + A_C[i] x[i] + A_E[i] x[i+1] = R[i]`` for ``M`` cells."""

    A_W: np.ndarray
    A_C: np.ndarray
    A_E: np.ndarray
    R: np.ndarray
    boundary_maps: Optional[tuple[BoundaryMap, BoundaryMap]] = None

    @property
    def n_cells(self) -> int:
        return self.A_C.shape[0]

    def row(self, i: int) -> BlockRow:
        return BlockRow(A_W=self.A_W[i], A_C=self.A_C[i], A_E=self.A_E[i], R=self.R[i])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.n_cells, 6)
        y = np.einsum("nij,nj->ni", self.A_C, x)
        y[1:] += np.einsum("nij,nj->ni", self.A_W[1:], x[:-1])
        y[:-1] += np.einsum("nij,nj->ni", self.A_E[:-1], x[1:])
        return y

    def to_dense(self) -> np.ndarray:
        M = self.n_cells
        A = np.zeros((6 * M, 6 * M))
        for i in range(M):
            A[6 * i : 6 * i + 6, 6 * i : 6 * i + 6] = self.A_C[i]
            if i > 0:
                A[6 * i : 6 * i + 6, 6 * (i - 1) : 6 * i] = self.A_W[i]
            if i < M - 1:
                A[6 * i : 6 * i + 6, 6 * (i + 1) : 6 * i + 12] = self.A_E[i]
        return A


def linearisation_coefficients(
    state: BeamState, geom: InitialGeometry, mesh: BeamMesh, mat: Material, jacobian: JacobianMode = "face"
) -> CoefficientSet:
    """Face-located coefficient set used to assemble the Newton system."""
    face = compute_coefficients(state, geom, mesh, mat, location="face")
    if jacobian == "face":
        return face
    if jacobian == "interpolated":
        return interpolate_to_faces(compute_coefficients(state, geom, mesh, mat, location="cell"), face, mesh)
    raise ValueError(f"jacobian must be 'face' or 'interpolated', got '{jacobian}'")


def _explicit_fluxes(coeffs: CoefficientSet) -> tuple[np.ndarray, np.ndarray]:
    return np.hstack([coeffs.C_expw, coeffs.C_expm]), coeffs.C_expmw


def assemble_force_row(coeffs: CoefficientSet, mesh: BeamMesh, f_c: np.ndarray, cell: int) -> StencilRow:
    """Force balance of one cell from its interior faces.

    ``coeffs`` must be face-located. A missing end face is left to the
    boundary treatment; its out-of-domain block stays zero.
    """
    return _cell_rows(coeffs, mesh, cell, rows=slice(0, 3), source=np.asarray(f_c, dtype=float))


def assemble_moment_row(coeffs: CoefficientSet, mesh: BeamMesh, t_c: np.ndarray, cell: int) -> StencilRow:
    """Moment balance of one cell, including the moment-arm terms of its interior faces."""
    return _cell_rows(coeffs, mesh, cell, rows=slice(3, 6), source=np.asarray(t_c, dtype=float))


def _cell_rows(coeffs: CoefficientSet, mesh: BeamMesh, cell: int, *, rows: slice, source: np.ndarray) -> StencilRow:
    if coeffs.location != "face":
        raise ValueError("row assembly needs face-located coefficients")
    M = mesh.n_cells
    if not (0 <= cell < M):
        raise IndexError(f"cell {cell} outside 0..{M - 1}")
    dF_left, dF_right, dA_left, dA_right = _face_jacobians(flux_maps(coeffs), mesh)
    flux, arm = _explicit_fluxes(coeffs)
    moment = rows.start == 3

    stencil = np.zeros((3, 18))
    residual = source * mesh.cell_length
    w, e = cell, cell + 1
    if e < M:
        stencil[:, 6:12] += dF_left[e][rows]
        stencil[:, 12:18] += dF_right[e][rows]
        residual = residual + flux[e][rows]
        if moment:
            half = 0.5 * mesh.L_e[cell]
            stencil[:, 6:12] += half * dA_left[e]
            stencil[:, 12:18] += half * dA_right[e]
            residual = residual + half * arm[e]
    if w > 0:
        stencil[:, 0:6] -= dF_left[w][rows]
        stencil[:, 6:12] -= dF_right[w][rows]
        residual = residual - flux[w][rows]
        if moment:
            half = 0.5 * mesh.L_w[cell]
            stencil[:, 0:6] += half * dA_left[w]
            stencil[:, 6:12] += half * dA_right[w]
            residual = residual + half * arm[w]
    return StencilRow(stencil=stencil, rhs=-residual)


def _end_linearisation(coeffs: CoefficientSet, maps: FluxMaps, index: int) -> FaceLinearisation:
    flux, arm = _explicit_fluxes(coeffs)
    return FaceLinearisation(
        flux=flux[index],
        arm=arm[index],
        rprime=coeffs.rprime[index],
        F_der=maps.F_der[index],
        F_val=maps.F_val[index],
        A_der=maps.A_der[index],
        A_val=maps.A_val[index],
    )


def assemble_system(
    state: BeamState,
    geom: InitialGeometry,
    mesh: BeamMesh,
    mat: Material,
    loads: LoadSet,
    bcs: tuple[EndCondition, EndCondition],
    *,
    jacobian: JacobianMode = "face",
) -> BlockTridiagonalSystem:
    """Assemble ``A dx = R`` for all cells at the current iterate.

    Args:
        state: Current iterate (the linearisation point).
        geom: Initial geometry.
        mesh: Mesh.
        mat: Material.
        loads: Distributed loads at the current load factor.
        bcs: West and east end conditions for this iteration.
        jacobian: ``"face"`` evaluates the implicit coefficients from the stored
            face fields (consistent Jacobian); ``"interpolated"`` gamma-weights
            the cell-centred set onto interior faces.

    Returns:
        The block system; its ``boundary_maps`` recover the end-face increments
        once the system is solved.
    """
    M = mesh.n_cells
    coeffs = linearisation_coefficients(state, geom, mesh, mat, jacobian)
    maps = flux_maps(coeffs)
    dF_left, dF_right, dA_left, dA_right = _face_jacobians(maps, mesh)
    flux, arm = _explicit_fluxes(coeffs)

    half_e = (0.5 * mesh.L_e)[:, None, None]
    half_w = (0.5 * mesh.L_w)[:, None, None]
    A_W = np.zeros((M, 6, 6))
    A_C = np.zeros((M, 6, 6))
    A_E = np.zeros((M, 6, 6))
    G = np.hstack([loads.f_c, loads.t_c]) * mesh.cell_length

    # east faces of cells 0..M-2 (faces 1..M-1)
    cells = np.arange(M - 1)
    e = cells + 1
    A_C[cells] += dF_left[e]
    A_E[cells] += dF_right[e]
    A_C[cells, 3:] += half_e[cells] * dA_left[e]
    A_E[cells, 3:] += half_e[cells] * dA_right[e]
    G[cells] += flux[e]
    G[cells, 3:] += half_e[cells, :, 0] * arm[e]

    # west faces of cells 1..M-1 (faces 1..M-1)
    cells = np.arange(1, M)
    w = cells
    A_W[cells] -= dF_left[w]
    A_C[cells] -= dF_right[w]
    A_W[cells, 3:] += half_w[cells] * dA_left[w]
    A_C[cells, 3:] += half_w[cells] * dA_right[w]
    G[cells] -= flux[w]
    G[cells, 3:] += half_w[cells, :, 0] * arm[w]

    R = -G
    dxb = mesh.boundary_distance
    end_faces = (_end_linearisation(coeffs, maps, 0), _end_linearisation(coeffs, maps, M))
    end_maps = (
        boundary.boundary_increment_map(coeffs.at(0), bcs[0], dxb),
        boundary.boundary_increment_map(coeffs.at(M), bcs[1], dxb),
    )
    for k, (cell, weight) in enumerate(((0, 0.5 * mesh.L_w[0]), (M - 1, 0.5 * mesh.L_e[M - 1]))):
        row = BlockRow(A_W=A_W[cell], A_C=A_C[cell], A_E=A_E[cell], R=R[cell])
        row = boundary.apply_boundary(row, bcs[k], end_maps[k], end_faces[k], dxb=dxb, arm_weight=weight)
        A_C[cell] = row.A_C
        R[cell] = row.R

    return BlockTridiagonalSystem(A_W=A_W, A_C=A_C, A_E=A_E, R=R, boundary_maps=end_maps)


def equilibrium_residual(
    state: BeamState,
    geom: InitialGeometry,
    mesh: BeamMesh,
    mat: Material,
    loads: LoadSet,
    bcs: tuple[EndCondition, EndCondition],
) -> np.ndarray:
    """Explicit discrete force and moment balance per cell, shape ``(M, 6)``.

    End faces carry the stored flux for prescribed components and the applied
    load for load-controlled ones.
    """
    M = mesh.n_cells
    flux = np.hstack([state.n_f, state.m_f])
    arm = np.cross(state.rprime_f, state.n_f)
    for cond, idx in ((bcs[0], 0), (bcs[1], M)):
        flux[idx], arm[idx] = boundary.explicit_end_terms(cond, flux[idx], arm[idx], state.rprime_f[idx])

    G = np.hstack([loads.f_c, loads.t_c]) * mesh.cell_length
    G += flux[1:] - flux[:-1]
    G[:, 3:] += 0.5 * mesh.L_e[:, None] * arm[1:] + 0.5 * mesh.L_w[:, None] * arm[:-1]
    return G
