from __future__ import annotations

import json
import math

import numpy as np
import pytest

from fvbeam.bench import benchmark_names, load_benchmark
from fvbeam.cases import (
    CaseDefinition,
    ScheduleStage,
    describe_case,
    expand_schedule,
    load_case,
    parse_case,
    serialise_case,
)
from fvbeam.errors import CaseFileError, CasePhysicsError, CaseSchemaError
from fvbeam.solver import monitor_values
from fvbeam.state import BeamState

MINIMAL = {
    "name": "minimal",
    "geometry": {"kind": "straight", "length": 10.0},
    "material": {"EA": 1.0e4, "GA2": 5.0e3, "GA3": 5.0e3, "GJ": 100.0, "EI2": 100.0, "EI3": 100.0},
    "mesh": {"cells": 10},
    "boundary": {"west": {"kind": "clamped"}, "east": {"kind": "free", "moment": [0.0, 0.0, 1.0]}},
    "schedule": [{"to": 1.0, "increments": 4}],
}


def _case(**overrides) -> dict:
    data = json.loads(json.dumps(MINIMAL))
    data.update(overrides)
    return data


@pytest.mark.unit
def test_minimal_case_defaults():
    case = parse_case(json.dumps(MINIMAL))
    assert case.length == 10.0
    assert case.solver.tolerance == 1e-10
    assert case.solver.max_iterations == 30
    assert case.solver.jacobian == "face"
    assert case.solver.predictor
    assert case.output.write_every == 1
    assert case.loads.point_forces == ()
    assert case.load_factors() == (0.25, 0.5, 0.75, 1.0)

    problem = case.to_problem()
    assert np.allclose(np.diag(problem.material.C_M), [100.0, 100.0, 100.0])
    assert problem.reference_length == 10.0
    assert problem.crown == ()


@pytest.mark.unit
def test_section_material_form():
    data = _case(material={"E": 1.0e7, "G": 5.0e6, "section": {"shape": "rectangle", "width": 1.0, "height": 1.0}})
    material = parse_case(json.dumps(data)).material.to_material()
    assert material.C_M[2, 2] == pytest.approx(1.0e7 / 12.0)
    assert material.C_M[0, 0] == pytest.approx(5.0e6 * 0.1408, rel=1e-3)


@pytest.mark.unit
def test_polar_torsion_of_the_bend45_section():
    material = load_benchmark("bend45").material.to_material()
    assert material.C_M[0, 0] == pytest.approx(5.0e6 / 6.0)
    assert material.C_M[1, 1] == pytest.approx(1.0e7 / 12.0)

    section = {"shape": "rectangle", "width": 1.0, "height": 1.0, "torsion": "warped"}
    data = _case(material={"E": 1.0, "G": 1.0, "section": section})
    with pytest.raises(CaseSchemaError):
        parse_case(json.dumps(data))


@pytest.mark.unit
def test_predictor_can_be_switched_off():
    case = parse_case(json.dumps(_case(solver={"predictor": False})))
    assert not case.solver.predictor
    assert not case.to_problem().settings.predictor


@pytest.mark.unit
@pytest.mark.parametrize(
    "material",
    [
        {"EA": 1.0, "GA2": 1.0},
        {"E": 1.0, "G": 1.0},
        {"EA": 1.0, "GA2": 1.0, "GA3": 1.0, "GJ": 1.0, "EI2": 1.0, "EI3": 1.0, "E": 1.0},
        {"EA": 1.0, "GA2": 1.0, "GA3": 1.0, "GJ": 1.0, "EI2": 1.0, "EI3": 1.0, "shear_factor": 0.8},
    ],
)
def test_material_needs_exactly_one_form(material):
    with pytest.raises(CaseSchemaError) as info:
        parse_case(json.dumps(_case(material=material)))
    assert info.value.path.startswith("material")


@pytest.mark.unit
def test_bad_json_reports_its_line():
    text = '{\n  "name": "broken",\n  "mesh": {"cells": 10,}\n}'
    with pytest.raises(CaseSchemaError) as info:
        parse_case(text)
    assert info.value.line == 3


@pytest.mark.unit
def test_unknown_field_reports_path_and_line():
    data = _case(mesh={"cells": 10, "grading": 1.2})
    text = json.dumps(data, indent=2)
    with pytest.raises(CaseSchemaError) as info:
        parse_case(text)
    assert info.value.path == "mesh.grading"
    assert info.value.line == text.splitlines().index('    "grading": 1.2') + 1
    assert "mesh.grading" in str(info.value)


@pytest.mark.unit
def test_missing_block():
    data = _case()
    del data["boundary"]
    with pytest.raises(CaseSchemaError) as info:
        parse_case(json.dumps(data))
    assert info.value.path == "boundary"


@pytest.mark.unit
@pytest.mark.parametrize(
    "overrides",
    [
        {"geometry": {"kind": "straight", "length": -1.0}},
        {"geometry": {"kind": "arc", "radius": 100.0, "span_deg": 370.0}},
        {"geometry": {"kind": "arc", "radius": 0.0, "span_deg": 45.0}},
        {"mesh": {"cells": 1}},
        {"material": {"EA": 1.0, "GA2": 1.0, "GA3": 1.0, "GJ": 1.0, "EI2": 0.0, "EI3": 1.0}},
        {"schedule": []},
        {"schedule": [{"to": 1.0, "step": 0.3}]},
        {"schedule": [{"to": 1.0, "increments": 0}]},
        {"output": {"monitor_faces": [11]}},
        {"output": {"monitor_cells": [10]}},
        {"output": {"write_every": 0}},
        {"loads": {"point_forces": [{"at": "crown", "force": [0.0, -1.0, 0.0]}]}},
        {"loads": {"point_forces": [{"at": 12.0, "force": [0.0, -1.0, 0.0]}]}},
    ],
)
def test_physically_inadmissible_cases(overrides):
    with pytest.raises(CasePhysicsError):
        parse_case(json.dumps(_case(**overrides)))


@pytest.mark.unit
def test_schedule_stage_needs_one_rule():
    with pytest.raises(ValueError):
        ScheduleStage(to=1.0)
    with pytest.raises(ValueError):
        ScheduleStage(to=1.0, increments=2, step=0.5)


@pytest.mark.unit
def test_expand_schedule():
    three = expand_schedule((ScheduleStage(to=0.5, increments=1), ScheduleStage(to=1.0, increments=2)))
    assert three == pytest.approx((0.5, 0.75, 1.0))

    arch = load_benchmark("arch215").load_factors()
    assert len(arch) == 8 + 800
    assert arch[7] == pytest.approx(8.0)
    assert arch[8] == pytest.approx(8.005)
    assert arch[-1] == pytest.approx(12.0)
    assert all(b > a for a, b in zip(arch, arch[1:]))

    unloading = expand_schedule((ScheduleStage(to=1.0, increments=2), ScheduleStage(to=0.0, step=0.25)))
    assert unloading == pytest.approx((0.5, 1.0, 0.75, 0.5, 0.25, 0.0))

    with pytest.raises(CasePhysicsError):
        expand_schedule((ScheduleStage(to=1.0, step=0.4),))
    with pytest.raises(CasePhysicsError):
        expand_schedule(())


@pytest.mark.unit
@pytest.mark.parametrize("name", benchmark_names())
def test_benchmarks_survive_serialisation(name):
    case = load_benchmark(name)
    again = parse_case(serialise_case(case))
    assert again == case
    assert again.load_factors() == case.load_factors()


@pytest.mark.unit
def test_load_case_from_disk(tmp_path):
    path = tmp_path / "case.json"
    path.write_text(json.dumps(MINIMAL), encoding="utf-8")
    case = load_case(path)
    assert isinstance(case, CaseDefinition)
    assert case.name == "minimal"
    assert issubclass(CaseSchemaError, CaseFileError)


@pytest.mark.unit
def test_crown_load_is_shared_by_the_two_middle_cells():
    problem = load_benchmark("arch215").to_problem()
    assert problem.crown == ((19, 0.5), (20, 0.5))
    h = problem.mesh.cell_length
    total = problem.loads.f_c.sum(axis=0) * h
    assert np.allclose(total, [0.0, -1.0, 0.0])
    assert problem.loads.f_c[19, 1] == pytest.approx(-0.5 / h)
    assert problem.loads.f_c[20, 1] == pytest.approx(-0.5 / h)
    assert problem.west.kind == "hinged"
    assert problem.east.kind == "clamped"


@pytest.mark.unit
def test_point_force_at_an_arc_length():
    data = _case(loads={"point_forces": [{"at": 3.2, "force": [0.0, 0.0, 2.0]}]})
    problem = parse_case(json.dumps(data)).to_problem()
    assert problem.loads.f_c[3, 2] == pytest.approx(2.0)
    assert np.count_nonzero(problem.loads.f_c) == 1


@pytest.mark.unit
def test_distributed_loads_are_per_cell():
    data = _case(loads={"distributed_force": [0.0, -2.0, 0.0], "distributed_torque": [0.0, 0.0, 0.5]})
    problem = parse_case(json.dumps(data)).to_problem()
    assert problem.loads.f_c.shape == (10, 3)
    assert np.allclose(problem.loads.f_c, [0.0, -2.0, 0.0])
    assert np.allclose(problem.loads.t_c, [0.0, 0.0, 0.5])


@pytest.mark.unit
def test_with_cells_drops_monitor_indices():
    data = _case(output={"monitor_faces": [10], "monitor_cells": [9], "write_every": 3})
    case = parse_case(json.dumps(data))
    coarse = case.with_cells(4)
    assert coarse.mesh.cells == 4
    assert coarse.output.monitor_faces == ()
    assert coarse.output.write_every == 3
    assert coarse.to_problem().mesh.n_cells == 4


@pytest.mark.unit
def test_describe_case():
    info = describe_case(load_benchmark("arch215"))
    assert info["length"] == pytest.approx(100.0 * math.radians(215.0))
    assert info["cells"] == 40
    assert info["cell_length"] == pytest.approx(info["length"] / 40)
    assert info["increments"] == 808
    assert info["final_load_factor"] == pytest.approx(12.0)
    assert info["C_M"] == [1.0e4, 1.0e4, 1.0e4]
    assert info["C_N"] == [4.0e4, 2.0e4, 2.0e4]
    assert info["reference_length"] == pytest.approx(info["length"])
    assert info["predictor"] is True
    json.dumps(info)


@pytest.mark.unit
def test_monitors_are_reported():
    data = _case(output={"monitor_faces": [0, 5], "monitor_cells": [9]})
    problem = parse_case(json.dumps(data)).to_problem()
    values = monitor_values(problem, BeamState.initial(problem.mesh, problem.geometry))
    assert {"face0_wx", "face5_wz", "cell9_wy"} <= set(values)
