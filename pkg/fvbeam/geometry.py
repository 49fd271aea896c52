"""Uniform control-volume mesh and stress-free initial configurations."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from fvbeam.errors import MeshError

logger = logging.getLogger(__name__)

Plane = Literal["xy", "xz", "yz"]
Turn = Literal["left", "right"]

_PLANE_AXES: dict[str, tuple[int, int]] = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


@dataclass(frozen=True)
class BeamMesh:
    """Uniform 1-D control-volume layout.

    Cell ``i`` is bounded by face ``i`` (west) and face ``i + 1`` (east).
    """

    length: float
    n_cells: int
    cell_centres: np.ndarray
    faces: np.ndarray
    cell_length: float
    L_w: np.ndarray
    L_e: np.ndarray
    gamma_w: np.ndarray
    gamma_e: np.ndarray
    face_signs: np.ndarray

    @property
    def boundary_distance(self) -> float:
        """Distance from an end face to the adjacent cell centre."""
        return 0.5 * self.cell_length

    @property
    def n_faces(self) -> int:
        return self.n_cells + 1


def build_uniform_mesh(length: float, n_cells: int) -> BeamMesh:
    """Split ``[0, length]`` into ``n_cells`` equal control volumes.

    Args:
        length: Initial beam length (m).
        n_cells: Number of control volumes, at least 2.

    Returns:
        The mesh with interpolation weights of one half everywhere.

    Raises:
        MeshError: If ``length <= 0`` or ``n_cells < 2``.
    """
    if not np.isfinite(length) or length <= 0.0:
        raise MeshError(f"beam length must be positive, got {length}")
    if int(n_cells) != n_cells or n_cells < 2:
        raise MeshError(f"at least 2 cells are required, got {n_cells}")
    n_cells = int(n_cells)

    h = length / n_cells
    faces = np.linspace(0.0, length, n_cells + 1)
    centres = 0.5 * (faces[:-1] + faces[1:])
    spacing = np.full(n_cells, h)
    # uniform spacing: gamma = (L/2) / L on both sides of every cell
    gamma = 0.5 * spacing / spacing
    signs = np.tile(np.array([-1.0, 1.0]), (n_cells, 1))
    return BeamMesh(
        length=float(length),
        n_cells=n_cells,
        cell_centres=centres,
        faces=faces,
        cell_length=h,
        L_w=spacing.copy(),
        L_e=spacing.copy(),
        gamma_w=gamma.copy(),
        gamma_e=gamma.copy(),
        face_signs=signs,
    )


def face_interpolate(
    mesh: BeamMesh, cell_values: np.ndarray, west: np.ndarray, east: np.ndarray
) -> np.ndarray:
    """Face values: gamma-weighted neighbours inside, supplied values at the ends."""
    cell_values = np.asarray(cell_values, dtype=float)
    out = np.empty((mesh.n_faces,) + cell_values.shape[1:], dtype=float)
    g = mesh.gamma_w[1:].reshape((-1,) + (1,) * (cell_values.ndim - 1))
    out[1:-1] = g * cell_values[:-1] + (1.0 - g) * cell_values[1:]
    out[0] = west
    out[-1] = east
    return out


def face_derivative(
    mesh: BeamMesh, cell_values: np.ndarray, west: np.ndarray, east: np.ndarray
) -> np.ndarray:
    """Arc-length derivative at every face.

    Interior faces difference the two neighbouring centres over ``L_C``; end
    faces difference the end value and the adjacent centre over the half cell.
    """
    cell_values = np.asarray(cell_values, dtype=float)
    dxb = mesh.boundary_distance
    out = np.empty((mesh.n_faces,) + cell_values.shape[1:], dtype=float)
    out[1:-1] = (cell_values[1:] - cell_values[:-1]) / mesh.cell_length
    out[0] = (cell_values[0] - np.asarray(west, dtype=float)) / dxb
    out[-1] = (np.asarray(east, dtype=float) - cell_values[-1]) / dxb
    return out


@dataclass(frozen=True)
class InitialGeometry:
    """Stress-free configuration evaluated at faces and cell centres.

    ``r0prime_f`` is the analytic unit tangent. ``t0_f`` is the same tangent
    obtained with :func:`face_derivative` from the initial positions; the
    translational strain is measured against it so that rigid motions of a
    curved beam are strain free on the discrete level.
    """

    kind: str
    r0_f: np.ndarray
    Lambda0_f: np.ndarray
    r0prime_f: np.ndarray
    r0_c: np.ndarray
    Lambda0_c: np.ndarray
    r0prime_c: np.ndarray
    t0_f: np.ndarray
    normal: np.ndarray
    radius: Optional[float] = None
    crown_arc_length: Optional[float] = None

    @property
    def tip(self) -> np.ndarray:
        return self.r0_f[-1]


def _check_span(mesh: BeamMesh, length: float) -> None:
    if not np.isclose(mesh.length, length, rtol=1e-12, atol=0.0):
        raise MeshError(f"mesh spans {mesh.length} m but the geometry is {length} m long")


def make_straight(length: float, mesh: BeamMesh) -> InitialGeometry:
    """Straight beam along ``e1`` with the reference frame equal to the global one."""
    _check_span(mesh, length)
    e1 = np.array([1.0, 0.0, 0.0])

    def positions(s: np.ndarray) -> np.ndarray:
        return s[:, None] * e1

    r0_f = positions(mesh.faces)
    r0_c = positions(mesh.cell_centres)
    eye_f = np.broadcast_to(np.eye(3), (mesh.n_faces, 3, 3)).copy()
    eye_c = np.broadcast_to(np.eye(3), (mesh.n_cells, 3, 3)).copy()
    return InitialGeometry(
        kind="straight",
        r0_f=r0_f,
        Lambda0_f=eye_f,
        r0prime_f=np.tile(e1, (mesh.n_faces, 1)),
        r0_c=r0_c,
        Lambda0_c=eye_c,
        r0prime_c=np.tile(e1, (mesh.n_cells, 1)),
        t0_f=face_derivative(mesh, r0_c, r0_f[0], r0_f[-1]),
        normal=np.array([0.0, 0.0, 1.0]),
    )


def arc_length(radius: float, span: float) -> float:
    return float(radius * span)


def make_arc(
    radius: float,
    span: float,
    mesh: BeamMesh,
    *,
    plane: Plane = "xy",
    start_tangent_angle: float = 0.0,
    turn: Turn = "left",
) -> InitialGeometry:
    """Circular arc starting at the origin.

    The arc lies in ``plane`` spanned by unit axes ``(a, b)``; its tangent at the
    west end makes ``start_tangent_angle`` with ``a`` and it bends towards
    ``+b`` (``turn="left"``) or ``-b`` (``turn="right"``). The frame columns are
    the tangent, the in-plane left normal and ``a x b``.

    Raises:
        MeshError: If ``radius <= 0``, ``span`` is outside ``(0, 2 pi)`` or the
            mesh does not span ``radius * span``.
    """
    if not np.isfinite(radius) or radius <= 0.0:
        raise MeshError(f"arc radius must be positive, got {radius}")
    if not (0.0 < span < 2.0 * np.pi):
        raise MeshError(f"arc span must lie in (0, 2*pi), got {span}")
    if plane not in _PLANE_AXES:
        raise MeshError(f"unknown plane '{plane}'")
    if turn not in ("left", "right"):
        raise MeshError(f"turn must be 'left' or 'right', got '{turn}'")
    length = arc_length(radius, span)
    _check_span(mesh, length)

    ia, ib = _PLANE_AXES[plane]
    a = np.zeros(3)
    b = np.zeros(3)
    a[ia] = 1.0
    b[ib] = 1.0
    normal = np.cross(a, b)
    alpha = float(start_tangent_angle)
    sense = 1.0 if turn == "left" else -1.0

    def frame(s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        theta = alpha + sense * s / radius
        c, sn = np.cos(theta), np.sin(theta)
        ca, sa = np.cos(alpha), np.sin(alpha)
        x = sense * radius * (sn - sa)
        y = sense * radius * (ca - c)
        r = x[:, None] * a + y[:, None] * b
        g1 = c[:, None] * a + sn[:, None] * b
        g2 = -sn[:, None] * a + c[:, None] * b
        g3 = np.broadcast_to(normal, g1.shape)
        Lam = np.stack([g1, g2, g3], axis=-1)
        return r, g1, Lam

    r0_f, t_f, Lam_f = frame(mesh.faces)
    r0_c, t_c, Lam_c = frame(mesh.cell_centres)

    # topmost point along +b
    top = radius * alpha if turn == "right" else radius * (np.pi - alpha)
    crown = float(np.clip(top, 0.0, length))

    logger.debug("arc geometry: R=%g span=%g L=%g crown s=%g", radius, span, length, crown)
    return InitialGeometry(
        kind="arc",
        r0_f=r0_f,
        Lambda0_f=Lam_f,
        r0prime_f=t_f,
        r0_c=r0_c,
        Lambda0_c=Lam_c,
        r0prime_c=t_c,
        t0_f=face_derivative(mesh, r0_c, r0_f[0], r0_f[-1]),
        normal=normal,
        radius=float(radius),
        crown_arc_length=crown,
    )


def cells_at(mesh: BeamMesh, s: float) -> list[tuple[int, float]]:
    """Cells sharing a point load at arc length ``s`` as ``(index, share)`` pairs.

    The load goes to the cell with the closest centre; a point sitting on an
    interior face is shared equally by its two cells.
    """
    if not (0.0 <= s <= mesh.length):
        raise MeshError(f"arc-length position {s} is outside [0, {mesh.length}]")
    dist = np.abs(mesh.cell_centres - s)
    nearest = int(np.argmin(dist))
    tied = np.flatnonzero(np.abs(dist - dist[nearest]) <= 1e-9 * mesh.cell_length)
    if tied.size > 1:
        return [(int(i), 1.0 / tied.size) for i in tied]
    return [(nearest, 1.0)]
