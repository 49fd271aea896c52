"""Evolving beam state, constitutive law and the incremental kinematic update."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Literal, Optional

import numpy as np

from fvbeam.errors import MaterialError
from fvbeam.geometry import BeamMesh, InitialGeometry, face_derivative, face_interpolate
from fvbeam.so3 import exp_so3, tangent, vee

logger = logging.getLogger(__name__)


def rectangle_torsion_constant(width: float, height: float) -> float:
    """Saint-Venant torsion constant of a solid rectangle (series approximation)."""
    a, b = max(width, height), min(width, height)
    return a * b**3 * (1.0 / 3.0 - 0.21 * (b / a) * (1.0 - b**4 / (12.0 * a**4)))


@dataclass(frozen=True)
class Material:
    """Diagonal linear-elastic section stiffness.

    ``C_N = diag(EA, GA2, GA3)`` and ``C_M = diag(GJ, EI2, EI3)``.
    """

    C_N: np.ndarray
    C_M: np.ndarray

    def __post_init__(self) -> None:
        for name in ("C_N", "C_M"):
            mat = np.asarray(getattr(self, name), dtype=float)
            if mat.shape != (3, 3):
                raise MaterialError(f"{name} must be 3x3, got shape {mat.shape}")
            if np.any(mat != np.diag(np.diag(mat))):
                raise MaterialError(f"{name} must be diagonal")
            if not np.all(np.isfinite(np.diag(mat))) or np.any(np.diag(mat) <= 0.0):
                raise MaterialError(f"{name} must have strictly positive diagonal entries")
            object.__setattr__(self, name, mat)

    @classmethod
    def from_products(
        cls, EA: float, GA2: float, GA3: float, GJ: float, EI2: float, EI3: float
    ) -> "Material":
        return cls(C_N=np.diag([EA, GA2, GA3]).astype(float), C_M=np.diag([GJ, EI2, EI3]).astype(float))

    @classmethod
    def from_section(
        cls,
        E: float,
        G: float,
        *,
        shape: Literal["rectangle", "circle"],
        width: Optional[float] = None,
        height: Optional[float] = None,
        radius: Optional[float] = None,
        shear_factor: float = 1.0,
        torsion: Literal["saint_venant", "polar"] = "saint_venant",
    ) -> "Material":
        """Derive the six products from moduli and a solid cross-section.

        ``width`` runs along the local ``e2`` axis and ``height`` along ``e3``.
        ``torsion="polar"`` takes ``J = I2 + I3`` in place of the Saint-Venant
        constant of a rectangle; a circle gets the polar moment either way.

        Raises:
            MaterialError: On missing or non-positive section data.
        """
        if E <= 0.0 or G <= 0.0 or shear_factor <= 0.0:
            raise MaterialError("E, G and the shear factor must be positive")
        if shape == "rectangle":
            if width is None or height is None or width <= 0.0 or height <= 0.0:
                raise MaterialError("rectangle sections need positive width and height")
            area = width * height
            I2 = width * height**3 / 12.0
            I3 = height * width**3 / 12.0
            J = I2 + I3 if torsion == "polar" else rectangle_torsion_constant(width, height)
        elif shape == "circle":
            if radius is None or radius <= 0.0:
                raise MaterialError("circle sections need a positive radius")
            area = np.pi * radius**2
            I2 = I3 = np.pi * radius**4 / 4.0
            J = np.pi * radius**4 / 2.0
        else:
            raise MaterialError(f"unknown section shape '{shape}'")
        kGA = shear_factor * G * area
        return cls.from_products(E * area, kGA, kGA, G * J, E * I2, E * I3)


@dataclass
class BeamState:
    """All evolving fields of the beam.

    Cell arrays have ``M`` rows, face arrays ``M + 1``. ``psi_c`` and ``psi_f``
    accumulate rotation vectors for output and end-face bookkeeping only; the
    kinematics always go through the rotation matrices.
    """

    w_c: np.ndarray
    psi_c: np.ndarray
    Lambda_c: np.ndarray
    w_f: np.ndarray
    psi_f: np.ndarray
    Lambda_f: np.ndarray
    K_f: np.ndarray
    Gamma_f: np.ndarray
    n_f: np.ndarray
    m_f: np.ndarray
    rprime_f: np.ndarray = field(repr=False)

    @classmethod
    def initial(cls, mesh: BeamMesh, geom: InitialGeometry) -> "BeamState":
        """Undeformed state: zero displacement and strain, identity rotations."""
        nc, nf = mesh.n_cells, mesh.n_faces
        return cls(
            w_c=np.zeros((nc, 3)),
            psi_c=np.zeros((nc, 3)),
            Lambda_c=np.broadcast_to(np.eye(3), (nc, 3, 3)).copy(),
            w_f=np.zeros((nf, 3)),
            psi_f=np.zeros((nf, 3)),
            Lambda_f=np.broadcast_to(np.eye(3), (nf, 3, 3)).copy(),
            K_f=np.zeros((nf, 3)),
            Gamma_f=np.zeros((nf, 3)),
            n_f=np.zeros((nf, 3)),
            m_f=np.zeros((nf, 3)),
            rprime_f=np.array(geom.t0_f, dtype=float, copy=True),
        )

    def copy(self) -> "BeamState":
        return replace(self, **{k: np.array(v, copy=True) for k, v in vars(self).items()})

    def total_rotation_f(self, geom: InitialGeometry) -> np.ndarray:
        """``Lambda_t = Lambda Lambda_0`` at the faces."""
        return self.Lambda_f @ geom.Lambda0_f

    def total_rotation_c(self, geom: InitialGeometry) -> np.ndarray:
        return self.Lambda_c @ geom.Lambda0_c


def _transpose_apply(R: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``R^T v`` for stacks."""
    return np.einsum("nji,nj->ni", R, v)


def _apply(R: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("nij,nj->ni", R, v)


def refresh_resultants(state: BeamState, geom: InitialGeometry, mesh: BeamMesh, mat: Material) -> None:
    """Recompute ``r'``, ``Gamma`` and the spatial resultants from ``w`` and ``Lambda`` in place."""
    state.rprime_f = geom.t0_f + face_derivative(mesh, state.w_c, state.w_f[0], state.w_f[-1])
    Lam_t = state.Lambda_f @ geom.Lambda0_f
    state.Gamma_f = _transpose_apply(Lam_t, state.rprime_f) - _transpose_apply(geom.Lambda0_f, geom.t0_f)
    state.n_f = _apply(Lam_t, state.Gamma_f @ mat.C_N.T)
    state.m_f = _apply(Lam_t, state.K_f @ mat.C_M.T)


def update_state(
    state: BeamState,
    dw_c: np.ndarray,
    dpsi_c: np.ndarray,
    geom: InitialGeometry,
    mesh: BeamMesh,
    mat: Material,
    *,
    dw_b: Optional[np.ndarray] = None,
    dpsi_b: Optional[np.ndarray] = None,
) -> BeamState:
    """Apply one set of cell increments and return the updated state.

    Args:
        state: Current iterate; left untouched.
        dw_c: Displacement increments per cell, shape ``(M, 3)``.
        dpsi_c: Spatial rotation increments per cell, shape ``(M, 3)``.
        geom: Initial geometry.
        mesh: Mesh.
        mat: Material.
        dw_b: West and east end-face displacement increments, shape ``(2, 3)``.
        dpsi_b: West and east end-face rotation increments, shape ``(2, 3)``.

    Returns:
        A new state with rotations, strains and resultants updated.

    Raises:
        RotationDomainError: If an interpolated face increment reaches pi.
    """
    dw_c = np.asarray(dw_c, dtype=float).reshape(mesh.n_cells, 3)
    dpsi_c = np.asarray(dpsi_c, dtype=float).reshape(mesh.n_cells, 3)
    dw_b = np.zeros((2, 3)) if dw_b is None else np.asarray(dw_b, dtype=float)
    dpsi_b = np.zeros((2, 3)) if dpsi_b is None else np.asarray(dpsi_b, dtype=float)

    dpsi_f = face_interpolate(mesh, dpsi_c, dpsi_b[0], dpsi_b[1])
    dpsi_prime = face_derivative(mesh, dpsi_c, dpsi_b[0], dpsi_b[1])
    dT = tangent(dpsi_f)

    new = state.copy()
    new.w_c = state.w_c + dw_c
    new.w_f = face_interpolate(mesh, new.w_c, state.w_f[0] + dw_b[0], state.w_f[-1] + dw_b[1])

    new.psi_c = state.psi_c + _transpose_apply(state.Lambda_c, dpsi_c)
    new.psi_f = state.psi_f + _transpose_apply(state.Lambda_f, dpsi_f)

    # material curvature increment Lambda_0^T Lambda*^T dT^T dpsi'
    spatial = _transpose_apply(dT, dpsi_prime)
    new.K_f = state.K_f + _transpose_apply(geom.Lambda0_f, _transpose_apply(state.Lambda_f, spatial))

    new.Lambda_f = exp_so3(dpsi_f) @ state.Lambda_f
    new.Lambda_c = exp_so3(dpsi_c) @ state.Lambda_c

    refresh_resultants(new, geom, mesh, mat)
    return new


def rebuild_centre_line(
    state: BeamState,
    Gamma_f: np.ndarray,
    geom: InitialGeometry,
    mesh: BeamMesh,
    mat: Material,
    *,
    anchor: Literal["west", "east"],
) -> BeamState:
    """Re-integrate the centre line through the current frames.

    Every face tangent is set to ``Lambda_t (Gamma_f + Lambda_0^T t_0)``, so the
    translational strain equals ``Gamma_f`` in the current frames, and the
    positions are summed from the anchored end face. Rotations and curvature
    are kept.

    Args:
        state: Iterate whose rotations are trusted; left untouched.
        Gamma_f: Translational strain to impose at the faces, shape ``(M + 1, 3)``.
        geom: Initial geometry.
        mesh: Mesh.
        mat: Material.
        anchor: End whose displacement is kept.

    Returns:
        A new state with displacements, strains and resultants rebuilt.
    """
    Lam_t = state.Lambda_f @ geom.Lambda0_f
    rprime = _apply(Lam_t, np.asarray(Gamma_f, dtype=float) + _transpose_apply(geom.Lambda0_f, geom.t0_f))

    dxb = mesh.boundary_distance
    lengths = np.full(mesh.n_faces, mesh.cell_length)
    lengths[0] = lengths[-1] = dxb
    # west face, every cell centre, east face
    csum = np.vstack([np.zeros((1, 3)), np.cumsum(lengths[:, None] * rprime, axis=0)])
    if anchor == "west":
        points = geom.r0_f[0] + state.w_f[0] + csum
    else:
        points = geom.r0_f[-1] + state.w_f[-1] - (csum[-1] - csum)

    new = state.copy()
    new.w_c = points[1:-1] - geom.r0_c
    new.w_f = face_interpolate(mesh, new.w_c, points[0] - geom.r0_f[0], points[-1] - geom.r0_f[-1])
    refresh_resultants(new, geom, mesh, mat)
    return new


def energy_density(state: BeamState, mat: Material) -> np.ndarray:
    """Stored energy per unit length at each face."""
    axial = np.einsum("ni,ij,nj->n", state.Gamma_f, mat.C_N, state.Gamma_f)
    bending = np.einsum("ni,ij,nj->n", state.K_f, mat.C_M, state.K_f)
    return 0.5 * (axial + bending)


def strain_energy(state: BeamState, mesh: BeamMesh, mat: Material) -> float:
    """Total stored energy: each cell weighs the mean of its two face densities by ``L_C``."""
    density = energy_density(state, mat)
    return float(np.sum(mesh.cell_length * 0.5 * (density[:-1] + density[1:])))


def _curvature_from_frames(frames: np.ndarray, h: float) -> np.ndarray:
    A, B = frames[:-1], frames[1:]
    return vee(np.swapaxes(A + B, -1, -2) @ (B - A)) / (2.0 * h)


def rotational_strain_by_definition(state: BeamState, geom: InitialGeometry, mesh: BeamMesh) -> np.ndarray:
    """Cell curvature ``vee(Lambda_t^T Lambda_t')`` from central differences of face frames.

    The initial curvature obtained with the same stencil is subtracted, so the
    result is directly comparable with the accumulated ``K_f``.
    """
    Lam_t = state.Lambda_f @ geom.Lambda0_f
    return _curvature_from_frames(Lam_t, mesh.cell_length) - _curvature_from_frames(
        geom.Lambda0_f, mesh.cell_length
    )
