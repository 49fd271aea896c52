"""Block-Thomas direct solve and the load-stepped Newton-Raphson driver."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat

from fvbeam.assembly import BlockTridiagonalSystem, LoadSet, assemble_system
from fvbeam.boundary import BoundarySpec, recover_boundary_kinematics, resolve_end
from fvbeam.errors import BoundarySingularError, RotationDomainError, SingularPivotError
from fvbeam.geometry import BeamMesh, InitialGeometry
from fvbeam.so3 import norm
from fvbeam.state import BeamState, Material, rebuild_centre_line, update_state

if TYPE_CHECKING:
    from fvbeam.cases import CaseDefinition

logger = logging.getLogger(__name__)


class SolverSettings(BaseModel):
    """Newton-Raphson controls."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    tolerance: PositiveFloat = 1.0e-10
    max_iterations: int = Field(default=30, ge=1)
    reference_length: Optional[PositiveFloat] = None
    jacobian: Literal["face", "interpolated"] = "face"
    predictor: bool = True


@dataclass(frozen=True)
class IncrementReport:
    """Outcome of one load increment."""

    index: int
    load_factor: float
    iterations: int
    residual: float
    converged: bool
    residuals: tuple[float, ...] = ()
    reason: Optional[str] = None
    monitors: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class BeamProblem:
    """Everything a run needs, resolved from a case definition."""

    name: str
    mesh: BeamMesh
    geometry: InitialGeometry
    material: Material
    west: BoundarySpec
    east: BoundarySpec
    loads: LoadSet
    load_factors: tuple[float, ...]
    settings: SolverSettings = SolverSettings()
    crown: tuple[tuple[int, float], ...] = ()
    monitor_faces: tuple[int, ...] = ()
    monitor_cells: tuple[int, ...] = ()

    @property
    def reference_length(self) -> float:
        return self.settings.reference_length or self.mesh.length


@dataclass
class CaseRun:
    """History and final state of a run of the load schedule."""

    problem: BeamProblem
    history: list[IncrementReport]
    state: BeamState
    completed: bool
    elapsed: float = 0.0

    @property
    def last_converged_load(self) -> float:
        converged = [r.load_factor for r in self.history if r.converged]
        return converged[-1] if converged else 0.0

    @property
    def total_iterations(self) -> int:
        return sum(r.iterations for r in self.history)


def block_thomas_solve(system: BlockTridiagonalSystem) -> np.ndarray:
    """Solve the block-tridiagonal system by block forward elimination.

    Each 6x6 pivot ``S_i = A_C[i] - A_W[i] C'_{i-1}`` is factorised with partial
    pivoting; the block pattern itself is never permuted.

    Returns:
        The solution, shape ``(M, 6)``.

    Raises:
        SingularPivotError: If a pivot block is singular or yields non-finite values.
    """
    M = system.n_cells
    C_prime = np.zeros((M, 6, 6))
    d_prime = np.zeros((M, 6))
    for i in range(M):
        S = system.A_C[i]
        rhs = system.R[i]
        if i > 0:
            S = S - system.A_W[i] @ C_prime[i - 1]
            rhs = rhs - system.A_W[i] @ d_prime[i - 1]
        try:
            sol = np.linalg.solve(S, np.column_stack([system.A_E[i], rhs]))
        except np.linalg.LinAlgError as exc:
            raise SingularPivotError(i) from exc
        if not np.all(np.isfinite(sol)):
            raise SingularPivotError(i)
        C_prime[i] = sol[:, :6]
        d_prime[i] = sol[:, 6]

    x = np.empty((M, 6))
    x[-1] = d_prime[-1]
    for i in range(M - 2, -1, -1):
        x[i] = d_prime[i] - C_prime[i] @ x[i + 1]
    return x


def residual_norm(dw: np.ndarray, dpsi: np.ndarray, reference_length: float) -> float:
    """``max`` over points of ``max(|dw| / L_ref, |dpsi|)``."""
    dw = np.asarray(dw, dtype=float).reshape(-1, 3)
    dpsi = np.asarray(dpsi, dtype=float).reshape(-1, 3)
    if dw.size == 0:
        return 0.0
    return float(max(np.max(norm(dw)) / reference_length, np.max(norm(dpsi))))


def _signed_angle(a: np.ndarray, b: np.ndarray, axis: np.ndarray) -> float:
    return float(np.arctan2(np.dot(axis, np.cross(a, b)), np.dot(a, b)))


def monitor_values(problem: BeamProblem, state: BeamState) -> dict[str, float]:
    """Monitored values: tip (east face), west reactions, crown and requested points."""
    out: dict[str, float] = {}

    def put(prefix: str, vec: np.ndarray) -> None:
        for axis, value in zip("xyz", vec):
            out[f"{prefix}{axis}"] = float(value)

    put("tip_w", state.w_f[-1])
    put("tip_psi", state.psi_f[-1])
    put("tip_n", state.n_f[-1])
    put("tip_m", state.m_f[-1])
    put("west_n", state.n_f[0])
    put("west_m", state.m_f[0])

    if problem.crown:
        geom = problem.geometry
        w = np.zeros(3)
        phi = 0.0
        for cell, share in problem.crown:
            t0 = geom.Lambda0_c[cell][:, 0]
            t = (state.Lambda_c[cell] @ geom.Lambda0_c[cell])[:, 0]
            w += share * state.w_c[cell]
            phi += share * _signed_angle(t0, t, geom.normal)
        put("crown_w", w)
        out["crown_phi"] = phi

    for f in problem.monitor_faces:
        put(f"face{f}_w", state.w_f[f])
    for c in problem.monitor_cells:
        put(f"cell{c}_w", state.w_c[c])
    return out


def _newton_step(
    current: BeamState, problem: BeamProblem, load_factor: float, loads: LoadSet
) -> tuple[BeamState, float]:
    """Assemble at ``current``, solve, recover the end faces and update."""
    mesh, geom, mat = problem.mesh, problem.geometry, problem.material
    bcs = (
        resolve_end(problem.west, "west", load_factor, current),
        resolve_end(problem.east, "east", load_factor, current),
    )
    system = assemble_system(current, geom, mesh, mat, loads, bcs, jacobian=problem.settings.jacobian)
    x = block_thomas_solve(system)
    dw_c, dpsi_c = x[:, :3], x[:, 3:]
    west_map, east_map = system.boundary_maps
    dw_w, dpsi_w = recover_boundary_kinematics(west_map, dw_c[0], dpsi_c[0])
    dw_e, dpsi_e = recover_boundary_kinematics(east_map, dw_c[-1], dpsi_c[-1])
    dw_b = np.vstack([dw_w, dw_e])
    dpsi_b = np.vstack([dpsi_w, dpsi_e])
    updated = update_state(current, dw_c, dpsi_c, geom, mesh, mat, dw_b=dw_b, dpsi_b=dpsi_b)
    res = residual_norm(np.vstack([dw_c, dw_b]), np.vstack([dpsi_c, dpsi_b]), problem.reference_length)
    return updated, res


@dataclass
class _Attempt:
    state: BeamState
    residuals: list[float]
    converged: bool = False
    reason: Optional[str] = None


def _iterate(
    start: BeamState,
    problem: BeamProblem,
    load_factor: float,
    loads: LoadSet,
    budget: int,
    *,
    index: int,
    offset: int = 0,
) -> _Attempt:
    """Run up to ``budget`` Newton iterations from ``start``."""
    tolerance = problem.settings.tolerance
    attempt = _Attempt(state=start, residuals=[])
    for _ in range(budget):
        try:
            attempt.state, res = _newton_step(attempt.state, problem, load_factor, loads)
        except (SingularPivotError, RotationDomainError, BoundarySingularError) as exc:
            attempt.reason = str(exc)
            return attempt
        attempt.residuals.append(res)
        logger.debug("increment %d iteration %d residual %.3e", index, offset + len(attempt.residuals), res)
        if not np.isfinite(res):
            attempt.reason = "non-finite correction"
            return attempt
        if res <= tolerance:
            attempt.converged = True
            return attempt
    attempt.reason = f"no convergence in {problem.settings.max_iterations} iterations"
    return attempt


def predictor_anchor(problem: BeamProblem) -> Optional[Literal["west", "east"]]:
    """End the centre line is re-integrated from, or ``None`` without a single anchored end."""
    west, east = problem.west.translation_fixed, problem.east.translation_fixed
    if west and not east:
        return "west"
    if east and not west:
        return "east"
    return None


def run_increment(
    state: BeamState,
    problem: BeamProblem,
    load_factor: float,
    *,
    index: int = 0,
) -> tuple[BeamState, IncrementReport]:
    """Newton iterations at one load factor.

    Each iteration assembles the system at the current iterate, solves it,
    recovers the end-face increments and updates the state. The first solve
    starts from the converged state. When it has not already converged and
    exactly one end is held in translation, the centre line is re-integrated
    from that end through the updated frames at the converged translational
    strain, and Newton continues from there. Should that attempt fail, Newton
    continues from the plain first iterate instead. Every solve counts as an
    iteration.

    Failure to converge, a singular pivot or an oversized rotation increment
    is reported in the returned report; the returned state is then the input
    state.
    """
    settings = problem.settings
    loads = problem.loads.scaled(load_factor)

    first = _iterate(state, problem, load_factor, loads, 1, index=index)
    residuals = list(first.residuals)
    outcome = first
    if not first.converged and first.residuals and np.isfinite(residuals[-1]) and settings.max_iterations > 1:
        budget = settings.max_iterations - 1
        anchor = predictor_anchor(problem) if settings.predictor else None
        if anchor is not None:
            predicted = rebuild_centre_line(
                first.state, state.Gamma_f, problem.geometry, problem.mesh, problem.material, anchor=anchor
            )
            outcome = _iterate(predicted, problem, load_factor, loads, budget, index=index, offset=len(residuals))
            residuals.extend(outcome.residuals)
            if not outcome.converged:
                logger.debug("increment %d: predicted start failed (%s), continuing plain Newton", index, outcome.reason)
        if not outcome.converged:
            outcome = _iterate(first.state, problem, load_factor, loads, budget, index=index, offset=len(residuals))
            residuals.extend(outcome.residuals)

    converged = outcome.converged
    final = outcome.state if converged else state
    report = IncrementReport(
        index=index,
        load_factor=float(load_factor),
        iterations=len(residuals),
        residual=residuals[-1] if residuals else float("nan"),
        converged=converged,
        residuals=tuple(residuals),
        reason=None if converged else outcome.reason,
        monitors=monitor_values(problem, final),
    )
    if not converged:
        logger.warning("increment %d at load factor %.6g failed: %s", index, load_factor, report.reason)
    return final, report


IncrementCallback = Callable[[IncrementReport, BeamState], None]


def run_case(
    case: Union["CaseDefinition", BeamProblem],
    *,
    on_increment: Optional[IncrementCallback] = None,
    load_factors: Optional[Sequence[float]] = None,
) -> CaseRun:
    """Run the load schedule of a case.

    The schedule aborts at the first increment that fails to converge; the
    returned state is the last converged one.

    Args:
        case: A case definition or an already resolved problem.
        on_increment: Called after every attempted increment.
        load_factors: Override the schedule (used by buckling searches).

    Returns:
        The run history, the final converged state and whether the schedule completed.
    """
    problem = case if isinstance(case, BeamProblem) else case.to_problem()
    factors = tuple(load_factors) if load_factors is not None else problem.load_factors
    state = BeamState.initial(problem.mesh, problem.geometry)
    history: list[IncrementReport] = []
    completed = True
    started = time.perf_counter()

    logger.info("running '%s': %d cells, %d increments", problem.name, problem.mesh.n_cells, len(factors))
    for index, factor in enumerate(factors, start=1):
        state, report = run_increment(state, problem, factor, index=index)
        history.append(report)
        if on_increment is not None:
            on_increment(report, state)
        if not report.converged:
            completed = False
            logger.warning(
                "schedule aborted at increment %d; last converged load factor %.6g",
                index,
                history[-2].load_factor if len(history) > 1 else 0.0,
            )
            break
        logger.info(
            "increment %d/%d  load %.6g  iterations %d  residual %.2e",
            index,
            len(factors),
            factor,
            report.iterations,
            report.residual,
        )

    elapsed = time.perf_counter() - started
    logger.info("'%s' finished in %.2f s (%d Newton iterations)", problem.name, elapsed, sum(r.iterations for r in history))
    return CaseRun(problem=problem, history=history, state=state, completed=completed, elapsed=elapsed)
