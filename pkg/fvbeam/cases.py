"""JSON case files: schema, parsing, physical validation and serialisation.

A case file fully determines a run. Units are SI throughout.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fvbeam.assembly import LoadSet
from fvbeam.boundary import BoundarySpec, Vec3
from fvbeam.errors import CasePhysicsError, CaseSchemaError, MaterialError, MeshError
from fvbeam.geometry import BeamMesh, InitialGeometry, build_uniform_mesh, cells_at, make_arc, make_straight
from fvbeam.solver import BeamProblem, SolverSettings
from fvbeam.state import Material

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class StraightGeometry(_Strict):
    kind: Literal["straight"]
    length: float


class ArcGeometry(_Strict):
    """Circular arc starting at the origin (angles in degrees)."""

    kind: Literal["arc"]
    radius: float
    span_deg: float
    plane: Literal["xy", "xz", "yz"] = "xy"
    start_tangent_deg: float = 0.0
    turn: Literal["left", "right"] = "left"


Geometry = Annotated[Union[StraightGeometry, ArcGeometry], Field(discriminator="kind")]


class SectionBlock(_Strict):
    shape: Literal["rectangle", "circle"]
    width: Optional[float] = None
    height: Optional[float] = None
    radius: Optional[float] = None
    torsion: Literal["saint_venant", "polar"] = "saint_venant"


class MaterialBlock(_Strict):
    """Either the six stiffness products or ``E``, ``G`` and a section."""

    EA: Optional[float] = None
    GA2: Optional[float] = None
    GA3: Optional[float] = None
    GJ: Optional[float] = None
    EI2: Optional[float] = None
    EI3: Optional[float] = None
    E: Optional[float] = None
    G: Optional[float] = None
    section: Optional[SectionBlock] = None
    shear_factor: Optional[float] = None

    @model_validator(mode="after")
    def _one_form(self) -> "MaterialBlock":
        products = [self.EA, self.GA2, self.GA3, self.GJ, self.EI2, self.EI3]
        section_form = [self.E, self.G, self.section]
        has_products = any(v is not None for v in products)
        has_section = any(v is not None for v in section_form)
        if has_products == has_section:
            raise ValueError("give either EA, GA2, GA3, GJ, EI2, EI3 or E, G and section")
        if has_products and any(v is None for v in products):
            raise ValueError("all six stiffness products are required")
        if has_section and any(v is None for v in section_form):
            raise ValueError("E, G and section are all required")
        if has_products and self.shear_factor is not None:
            raise ValueError("shear_factor only applies to section-derived stiffness")
        return self

    def to_material(self) -> Material:
        if self.EA is not None:
            return Material.from_products(self.EA, self.GA2, self.GA3, self.GJ, self.EI2, self.EI3)
        sec = self.section
        return Material.from_section(
            self.E,
            self.G,
            shape=sec.shape,
            width=sec.width,
            height=sec.height,
            radius=sec.radius,
            shear_factor=1.0 if self.shear_factor is None else self.shear_factor,
            torsion=sec.torsion,
        )


class MeshBlock(_Strict):
    cells: int


class BoundaryBlock(_Strict):
    west: BoundarySpec
    east: BoundarySpec


class PointForce(_Strict):
    """Concentrated force at ``"crown"`` or at an arc-length position (m)."""

    at: Union[Literal["crown"], float]
    force: Vec3


class LoadsBlock(_Strict):
    distributed_force: Vec3 = (0.0, 0.0, 0.0)
    distributed_torque: Vec3 = (0.0, 0.0, 0.0)
    point_forces: tuple[PointForce, ...] = ()


class ScheduleStage(_Strict):
    """Ramp the load factor to ``to`` in ``increments`` equal steps or in steps of ``step``."""

    to: float
    increments: Optional[int] = None
    step: Optional[float] = None

    @model_validator(mode="after")
    def _one_rule(self) -> "ScheduleStage":
        if (self.increments is None) == (self.step is None):
            raise ValueError("give exactly one of 'increments' or 'step'")
        return self


class OutputBlock(_Strict):
    monitor_faces: tuple[int, ...] = ()
    monitor_cells: tuple[int, ...] = ()
    write_every: int = 1


class CaseDefinition(_Strict):
    """A complete, self-contained run description."""

    name: str
    description: str = ""
    geometry: Geometry
    material: MaterialBlock
    mesh: MeshBlock
    boundary: BoundaryBlock
    loads: LoadsBlock = LoadsBlock()
    schedule: tuple[ScheduleStage, ...]
    solver: SolverSettings = SolverSettings()
    output: OutputBlock = OutputBlock()

    @property
    def length(self) -> float:
        geo = self.geometry
        if isinstance(geo, StraightGeometry):
            return geo.length
        return geo.radius * math.radians(geo.span_deg)

    def with_cells(self, cells: int) -> "CaseDefinition":
        """Same case on a different mesh (monitor indices are dropped)."""
        return self.model_copy(update={"mesh": MeshBlock(cells=cells), "output": OutputBlock(write_every=self.output.write_every)})

    def load_factors(self) -> tuple[float, ...]:
        return expand_schedule(self.schedule)

    def build_geometry(self) -> tuple[BeamMesh, InitialGeometry]:
        mesh = build_uniform_mesh(self.length, self.mesh.cells)
        geo = self.geometry
        if isinstance(geo, StraightGeometry):
            return mesh, make_straight(geo.length, mesh)
        return mesh, make_arc(
            geo.radius,
            math.radians(geo.span_deg),
            mesh,
            plane=geo.plane,
            start_tangent_angle=math.radians(geo.start_tangent_deg),
            turn=geo.turn,
        )

    def to_problem(self) -> BeamProblem:
        """Resolve geometry, material and loads into a solver problem."""
        mesh, geom = self.build_geometry()
        f_c = np.tile(np.asarray(self.loads.distributed_force, dtype=float), (mesh.n_cells, 1))
        t_c = np.tile(np.asarray(self.loads.distributed_torque, dtype=float), (mesh.n_cells, 1))
        crown: tuple[tuple[int, float], ...] = ()
        if geom.crown_arc_length is not None:
            crown = tuple(cells_at(mesh, geom.crown_arc_length))
        for point in self.loads.point_forces:
            if point.at == "crown":
                if not crown:
                    raise CasePhysicsError("a crown load needs an arc geometry")
                targets = crown
            else:
                targets = tuple(cells_at(mesh, float(point.at)))
            for cell, share in targets:
                f_c[cell] += share * np.asarray(point.force, dtype=float) / mesh.cell_length
        return BeamProblem(
            name=self.name,
            mesh=mesh,
            geometry=geom,
            material=self.material.to_material(),
            west=self.boundary.west,
            east=self.boundary.east,
            loads=LoadSet(f_c=f_c, t_c=t_c),
            load_factors=self.load_factors(),
            settings=self.solver,
            crown=crown,
            monitor_faces=self.output.monitor_faces,
            monitor_cells=self.output.monitor_cells,
        )


def expand_schedule(stages: tuple[ScheduleStage, ...]) -> tuple[float, ...]:
    """Load factors of every increment, starting from zero.

    Raises:
        CasePhysicsError: On empty schedules, non-positive counts or steps, or a
            step that does not divide its stage.
    """
    if not stages:
        raise CasePhysicsError("the load schedule has no stages")
    factors: list[float] = []
    start = 0.0
    for k, stage in enumerate(stages):
        if stage.increments is not None:
            if stage.increments < 1:
                raise CasePhysicsError(f"schedule stage {k}: increments must be at least 1")
            count = stage.increments
        else:
            if stage.step <= 0.0:
                raise CasePhysicsError(f"schedule stage {k}: step must be positive")
            ratio = abs(stage.to - start) / stage.step
            count = int(round(ratio))
            if count < 1 or abs(ratio - count) > 1e-9 * max(1.0, ratio):
                raise CasePhysicsError(f"schedule stage {k}: step {stage.step} does not divide {start} -> {stage.to}")
        factors.extend(start + (stage.to - start) * (i / count) for i in range(1, count + 1))
        start = stage.to
    return tuple(factors)


def validate_physics(case: CaseDefinition) -> None:
    """Physical admissibility checks that run after schema validation.

    Raises:
        CasePhysicsError: With a message naming the offending block.
    """
    geo = case.geometry
    if isinstance(geo, StraightGeometry):
        if not geo.length > 0.0:
            raise CasePhysicsError(f"geometry.length must be positive, got {geo.length}")
    else:
        if not geo.radius > 0.0:
            raise CasePhysicsError(f"geometry.radius must be positive, got {geo.radius}")
        if not 0.0 < geo.span_deg < 360.0:
            raise CasePhysicsError(f"geometry.span_deg must lie in (0, 360), got {geo.span_deg}")
    if case.mesh.cells < 2:
        raise CasePhysicsError(f"mesh.cells must be at least 2, got {case.mesh.cells}")
    try:
        case.material.to_material()
    except MaterialError as exc:
        raise CasePhysicsError(f"material: {exc}") from exc
    expand_schedule(case.schedule)
    if case.output.write_every < 1:
        raise CasePhysicsError("output.write_every must be at least 1")
    for f in case.output.monitor_faces:
        if not 0 <= f <= case.mesh.cells:
            raise CasePhysicsError(f"output.monitor_faces: face {f} is outside the mesh")
    for c in case.output.monitor_cells:
        if not 0 <= c < case.mesh.cells:
            raise CasePhysicsError(f"output.monitor_cells: cell {c} is outside the mesh")
    for point in case.loads.point_forces:
        if point.at == "crown":
            if isinstance(geo, StraightGeometry):
                raise CasePhysicsError("loads.point_forces: 'crown' needs an arc geometry")
        elif not 0.0 <= float(point.at) <= case.length:
            raise CasePhysicsError(f"loads.point_forces: position {point.at} is outside the beam")
    try:
        case.build_geometry()
    except MeshError as exc:
        raise CasePhysicsError(str(exc)) from exc


def _line_of(text: str, loc: tuple[Any, ...]) -> Optional[int]:
    """Best-effort line number of the innermost named key of ``loc``."""
    keys = [k for k in loc if isinstance(k, str)]
    for key in reversed(keys):
        needle = f'"{key}"'
        pos = text.find(needle)
        if pos >= 0:
            return text.count("\n", 0, pos) + 1
    return None


def parse_case(text: str) -> CaseDefinition:
    """Parse and validate a JSON case.

    Raises:
        CaseSchemaError: Malformed JSON (with its line) or a schema violation
            (with the dotted field path and, when found, its line).
        CasePhysicsError: Physically inadmissible values.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseSchemaError(exc.msg, line=exc.lineno) from exc
    try:
        case = CaseDefinition.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(err.get("loc", ()))
        path = ".".join(str(p) for p in loc)
        raise CaseSchemaError(err.get("msg", "invalid value"), path=path, line=_line_of(text, loc)) from exc
    validate_physics(case)
    return case


def load_case(path: Path) -> CaseDefinition:
    return parse_case(Path(path).read_text(encoding="utf-8"))


def serialise_case(case: CaseDefinition) -> str:
    """JSON text that parses back to an identical definition."""
    return case.model_dump_json(indent=2)


def describe_case(case: CaseDefinition) -> dict[str, Any]:
    """Derived quantities echoed next to the results."""
    material = case.material.to_material()
    factors = case.load_factors()
    return {
        "length": case.length,
        "cells": case.mesh.cells,
        "cell_length": case.length / case.mesh.cells,
        "C_N": np.diag(material.C_N).tolist(),
        "C_M": np.diag(material.C_M).tolist(),
        "increments": len(factors),
        "final_load_factor": factors[-1],
        "tolerance": case.solver.tolerance,
        "max_iterations": case.solver.max_iterations,
        "reference_length": case.solver.reference_length or case.length,
        "jacobian": case.solver.jacobian,
        "predictor": case.solver.predictor,
    }
