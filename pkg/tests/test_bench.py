from __future__ import annotations

import math

import numpy as np
import pytest

from fvbeam import bench
from fvbeam.bench import (
    CheckResult,
    analytic_reference,
    benchmark_names,
    convergence_order,
    count_sign_changes,
    detect_buckling,
    euler_analytic,
    load_benchmark,
    mesh_sweep,
    relative_error,
    run_verification,
    standard_cases,
)
from fvbeam.errors import CaseFileError, MeshError, ScheduleExhaustedError, UndefinedReferenceError
from fvbeam.solver import SolverSettings


@pytest.mark.unit
class TestEulerAnalytic:
    def test_no_moment(self):
        assert euler_analytic(0.0, 10.0, 100.0) == (0.0, 0.0, 0.0)

    def test_quarter_roll(self):
        psi_z, w_x, w_y = euler_analytic(2.5 * math.pi, 10.0, 100.0)
        assert psi_z == pytest.approx(math.pi / 4.0)
        assert w_x == pytest.approx(10.0 - 10.0 * math.sin(psi_z) / psi_z)
        assert w_y == pytest.approx(10.0 * (1.0 - math.cos(psi_z)) / psi_z)

    def test_full_circle_closes(self):
        psi_z, w_x, w_y = euler_analytic(20.0 * math.pi, 10.0, 100.0)
        assert psi_z == pytest.approx(2.0 * math.pi)
        assert w_x == pytest.approx(10.0)
        assert w_y == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("L,EI", [(0.0, 100.0), (10.0, 0.0), (-1.0, 1.0)])
    def test_rejects_non_positive_input(self, L, EI):
        with pytest.raises(ValueError):
            euler_analytic(1.0, L, EI)


@pytest.mark.unit
def test_relative_error():
    assert relative_error(9.0, 10.0) == pytest.approx(10.0)
    assert relative_error(-11.0, -10.0) == pytest.approx(10.0)
    with pytest.raises(UndefinedReferenceError):
        relative_error(1.0, 0.0)


@pytest.mark.unit
def test_convergence_order():
    h = np.array([2.0, 1.0, 0.5, 0.25])
    assert convergence_order(3.0 * h**2, h) == pytest.approx(2.0)
    assert convergence_order(0.1 * h, h) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        convergence_order([1.0, 0.5], [2.0, 1.0])
    with pytest.raises(ValueError):
        convergence_order([1.0, 0.0, 0.1], [2.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        convergence_order([1.0, 0.5, 0.25], [2.0, 1.0])


@pytest.mark.unit
def test_count_sign_changes():
    assert count_sign_changes([1.0, -1.0, 1.0, 0.0, -1.0]) == 3
    assert count_sign_changes([1.0, 1e-14, -1e-14, 2.0], tol=1e-12) == 0
    assert count_sign_changes([]) == 0


@pytest.mark.unit
def test_rotation_properties(rng):
    assert bench.rotation_update_drift(rng) <= 1e-10
    assert bench.branch_agreement(rng) <= 1e-14


@pytest.mark.unit
def test_two_curvature_routes_converge_at_second_order(bending_material):
    gaps = bench.curvature_route_gaps(bending_material, (10, 20, 40))
    assert 1.8 <= convergence_order(gaps, [0.2, 0.1, 0.05]) <= 2.2


@pytest.mark.unit
def test_benchmark_catalogue():
    names = benchmark_names()
    assert set(bench.PRIMARY_CASES) <= set(names)
    assert {"pure_bending_full_circle", "bend45_three_steps", "bend45_load_curve", "bend45_displacement"} <= set(names)
    cases = standard_cases()
    assert tuple(cases) == bench.PRIMARY_CASES
    assert cases["helix"].mesh.cells == 100
    assert len(cases["helix"].load_factors()) == 2000


@pytest.mark.unit
def test_unknown_benchmark():
    with pytest.raises(CaseFileError) as info:
        load_benchmark("cantilever_of_doom")
    assert "pure_bending" in str(info.value)


@pytest.mark.unit
def test_analytic_reference_only_for_a_pure_tip_moment():
    ref = analytic_reference(load_benchmark("pure_bending"))
    assert ref["tip_psiz"] == pytest.approx(math.pi / 4.0)
    assert ref["tip_wx"] < 0.0 < ref["tip_wy"]
    assert analytic_reference(load_benchmark("bend45")) is None
    assert analytic_reference(load_benchmark("helix")) is None


@pytest.mark.integration
def test_detect_buckling_needs_a_failure():
    with pytest.raises(ScheduleExhaustedError) as info:
        detect_buckling(load_benchmark("pure_bending"))
    assert info.value.last_load == pytest.approx(1.0)


@pytest.mark.integration
def test_detect_buckling_returns_the_last_converged_load():
    case = load_benchmark("bend45")
    strict = case.model_copy(update={"solver": SolverSettings(max_iterations=1)})
    assert detect_buckling(strict) == 0.0


@pytest.mark.integration
def test_pure_bending_sweep_is_second_order():
    result = mesh_sweep(load_benchmark("pure_bending"), (5, 10, 20))
    assert result.meshes == (5, 10, 20)
    assert result.spacings == pytest.approx((2.0, 1.0, 0.5))
    assert all(result.completed)
    errors = result.errors["tip_wx"]
    assert errors[0] > errors[1] > errors[2]
    assert 1.6 <= result.orders["tip_wx"] <= 2.4
    # tip_wz has a zero reference and carries no error
    assert "tip_wz" not in result.errors
    assert len(result.series("tip_wy")) == 3


@pytest.mark.integration
def test_sweep_against_a_reference_mesh_and_explicit_values():
    case = load_benchmark("bend45")
    by_mesh = mesh_sweep(case, (4, 8, 16), reference=32)
    assert set(by_mesh.reference) == {"tip_wx", "tip_wy", "tip_wz"}
    assert by_mesh.errors["tip_wz"][0] > by_mesh.errors["tip_wz"][-1]

    explicit = mesh_sweep(case, (4, 8), quantities=("tip_wz",), reference={"tip_wz": 53.225})
    assert explicit.reference == {"tip_wz": 53.225}
    assert explicit.orders["tip_wz"] is None


@pytest.mark.integration
def test_parallel_sweep_matches_the_serial_one():
    case = load_benchmark("pure_bending")
    serial = mesh_sweep(case, (4, 8, 16), jobs=1)
    parallel = mesh_sweep(case, (4, 8, 16), jobs=2)
    assert serial.values == parallel.values
    assert serial.errors == parallel.errors


@pytest.mark.unit
def test_sweep_input_errors():
    with pytest.raises(ValueError):
        mesh_sweep(load_benchmark("pure_bending"), ())


@pytest.mark.unit
def test_sweep_without_a_closed_form_needs_a_reference():
    with pytest.raises(ValueError):
        mesh_sweep(load_benchmark("bend45"), (4, 8, 16))


@pytest.mark.integration
def test_property_checks_pass():
    results = run_verification("properties")
    assert [r.name for r in results] == [
        "jacobian_consistency",
        "block_thomas_oracle",
        "so3_drift",
        "so3_branch_agreement",
        "curvature_two_routes_order",
    ]
    assert all(r.passed for r in results), results


@pytest.mark.integration
def test_pure_bending_check_reports_every_line():
    results = run_verification("pure_bending")
    assert [r.name for r in results] == ["pure_bending_completed", "pure_bending_wx", "pure_bending_wy"]
    assert results[0].passed
    assert all(math.isfinite(r.measured) for r in results)


@pytest.mark.integration
@pytest.mark.parametrize(
    "group,names",
    [
        ("objectivity", ["objectivity_completed", "objectivity_energy", "objectivity_displacement"]),
        ("full_circle", ["full_circle_completed", "full_circle_closure", "full_circle_iterations"]),
    ],
)
def test_solver_acceptance_checks_pass(group, names):
    results = bench.CHECKS[group]()
    assert [r.name for r in results] == names
    assert all(r.passed for r in results), results


@pytest.mark.integration
def test_bend45_check_meets_the_tight_tolerance_and_the_envelope():
    results = {r.name: r for r in bench.check_bend45()}
    assert len(results) == 7
    assert all(r.passed for r in results.values()), results
    for axis in ("wx", "wy", "wz"):
        assert results[f"bend45_{axis}"].tolerance == "0.5 %"


@pytest.mark.slow
def test_bend45_mesh_convergence_check_passes():
    results = {r.name: r for r in bench.check_bend45_convergence()}
    for axis in ("wx", "wy", "wz"):
        assert 1.8 <= results[f"bend45_order_{axis}"].measured <= 2.2
    assert 1.8 <= results["bend45_force_order_nz"].measured <= 2.2
    assert results["bend45_force_nx_finest"].measured <= 0.5
    assert results["bend45_force_nx_decreasing"].passed
    assert results["bend45_force_ny_decreasing"].passed
    assert all(r.passed for r in results.values()), results


@pytest.mark.integration
def test_stiffer_solver_model_fails_the_pure_bending_check(monkeypatch):
    original = bench.run_case

    def mis_modelled(case, **kwargs):
        material = case.material.model_copy(update={"EI3": 110.0})
        return original(case.model_copy(update={"material": material}), **kwargs)

    monkeypatch.setattr(bench, "run_case", mis_modelled)
    results = {r.name: r for r in run_verification("pure_bending")}
    assert results["pure_bending_completed"].passed
    assert not results["pure_bending_wy"].passed


@pytest.mark.unit
def test_failing_check_group_is_reported(monkeypatch):
    def broken() -> list[CheckResult]:
        raise MeshError("mesh went missing")

    monkeypatch.setitem(bench.CHECKS, "objectivity", broken)
    results = run_verification("objectivity")
    assert len(results) == 1
    assert results[0].name == "objectivity"
    assert not results[0].passed
    assert "mesh went missing" in results[0].detail


@pytest.mark.unit
def test_filter_without_a_match():
    assert run_verification("no_such_group") == []
