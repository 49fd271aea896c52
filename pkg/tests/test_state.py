from __future__ import annotations

import numpy as np
import pytest

from fvbeam.bench import convergence_order, curvature_route_gaps, random_state
from fvbeam.errors import MaterialError, RotationDomainError
from fvbeam.so3 import exp_so3, is_rotation
from fvbeam.state import (
    BeamState,
    Material,
    energy_density,
    rebuild_centre_line,
    rectangle_torsion_constant,
    rotational_strain_by_definition,
    strain_energy,
    update_state,
)


@pytest.mark.unit
class TestMaterial:
    def test_from_products(self, bending_material):
        assert np.allclose(np.diag(bending_material.C_N), [1.0e4, 5.0e3, 5.0e3])
        assert np.allclose(np.diag(bending_material.C_M), [100.0, 100.0, 100.0])

    def test_unit_square_section(self):
        mat = Material.from_section(1.0e7, 5.0e6, shape="rectangle", width=1.0, height=1.0)
        assert np.allclose(np.diag(mat.C_N), [1.0e7, 5.0e6, 5.0e6])
        assert mat.C_M[1, 1] == pytest.approx(1.0e7 / 12.0)
        assert mat.C_M[2, 2] == pytest.approx(1.0e7 / 12.0)
        assert mat.C_M[0, 0] == pytest.approx(5.0e6 * 0.1408, rel=1e-3)

    def test_rectangle_axes(self):
        mat = Material.from_section(1.0, 1.0, shape="rectangle", width=2.0, height=1.0)
        # width runs along e2, so bending about e3 uses width cubed
        assert mat.C_M[2, 2] == pytest.approx(1.0 * 8.0 / 12.0)
        assert mat.C_M[1, 1] == pytest.approx(2.0 * 1.0 / 12.0)

    def test_circle_and_shear_factor(self):
        mat = Material.from_section(2.0, 1.0, shape="circle", radius=1.0, shear_factor=0.9)
        assert mat.C_N[0, 0] == pytest.approx(2.0 * np.pi)
        assert mat.C_N[1, 1] == pytest.approx(0.9 * np.pi)
        assert mat.C_M[0, 0] == pytest.approx(np.pi / 2.0)
        assert mat.C_M[2, 2] == pytest.approx(2.0 * np.pi / 4.0)

    def test_polar_torsion_of_a_rectangle(self):
        mat = Material.from_section(1.0e7, 5.0e6, shape="rectangle", width=1.0, height=1.0, torsion="polar")
        assert mat.C_M[0, 0] == pytest.approx(5.0e6 / 6.0)
        assert np.allclose(np.diag(mat.C_M)[1:], 1.0e7 / 12.0)
        circle = Material.from_section(2.0, 1.0, shape="circle", radius=1.0, torsion="polar")
        assert circle.C_M[0, 0] == pytest.approx(np.pi / 2.0)

    def test_torsion_constant_of_a_square(self):
        assert rectangle_torsion_constant(1.0, 1.0) == pytest.approx(0.1408, abs=1e-4)
        assert rectangle_torsion_constant(2.0, 1.0) == rectangle_torsion_constant(1.0, 2.0)

    @pytest.mark.parametrize(
        "build",
        [
            lambda: Material.from_products(0.0, 1.0, 1.0, 1.0, 1.0, 1.0),
            lambda: Material.from_products(1.0, 1.0, 1.0, 1.0, -1.0, 1.0),
            lambda: Material(C_N=np.ones((3, 3)), C_M=np.eye(3)),
            lambda: Material(C_N=np.eye(2), C_M=np.eye(3)),
            lambda: Material.from_section(1.0, 1.0, shape="rectangle", width=1.0),
            lambda: Material.from_section(-1.0, 1.0, shape="circle", radius=1.0),
            lambda: Material.from_section(1.0, 1.0, shape="hexagon"),
        ],
    )
    def test_rejects_invalid_stiffness(self, build):
        with pytest.raises(MaterialError):
            build()


@pytest.mark.unit
def test_initial_state_is_unstrained(straight_beam):
    mesh, geom = straight_beam
    state = BeamState.initial(mesh, geom)
    assert state.w_c.shape == (10, 3)
    assert state.Lambda_f.shape == (11, 3, 3)
    assert np.allclose(state.Lambda_c, np.eye(3))
    assert np.allclose(state.rprime_f, geom.t0_f)
    assert np.allclose(state.Gamma_f, 0.0)


@pytest.mark.unit
def test_copy_is_deep(straight_beam):
    mesh, geom = straight_beam
    state = BeamState.initial(mesh, geom)
    clone = state.copy()
    clone.w_c[0, 0] = 1.0
    clone.Lambda_f[0, 0, 0] = 2.0
    assert state.w_c[0, 0] == 0.0
    assert state.Lambda_f[0, 0, 0] == 1.0


@pytest.mark.unit
def test_zero_update_changes_nothing(straight_beam, bending_material):
    mesh, geom = straight_beam
    state = BeamState.initial(mesh, geom)
    new = update_state(state, np.zeros((10, 3)), np.zeros((10, 3)), geom, mesh, bending_material)
    assert new is not state
    for name in ("w_c", "psi_c", "Lambda_c", "w_f", "psi_f", "Lambda_f", "K_f", "Gamma_f", "n_f", "m_f"):
        assert np.array_equal(getattr(new, name), getattr(state, name)), name


@pytest.mark.unit
def test_uniform_stretch(straight_beam, bending_material):
    mesh, geom = straight_beam
    alpha = 0.01
    state = BeamState.initial(mesh, geom)
    dw_c = np.zeros((10, 3))
    dw_c[:, 0] = alpha * mesh.cell_centres
    dw_b = np.array([[0.0, 0.0, 0.0], [alpha * mesh.length, 0.0, 0.0]])
    new = update_state(state, dw_c, np.zeros((10, 3)), geom, mesh, bending_material, dw_b=dw_b)
    assert np.allclose(new.Gamma_f, [alpha, 0.0, 0.0])
    assert np.allclose(new.n_f, [1.0e4 * alpha, 0.0, 0.0])
    assert np.allclose(new.m_f, 0.0)
    assert np.allclose(new.w_f[:, 0], alpha * mesh.faces)
    assert np.allclose(state.w_c, 0.0)


@pytest.mark.unit
def test_uniform_bending_gives_exact_curvature(straight_beam, bending_material):
    mesh, geom = straight_beam
    beta = 0.2
    dpsi_c = np.zeros((10, 3))
    dpsi_c[:, 2] = beta * mesh.cell_centres
    dpsi_b = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, beta * mesh.length]])
    new = update_state(
        BeamState.initial(mesh, geom), np.zeros((10, 3)), dpsi_c, geom, mesh, bending_material, dpsi_b=dpsi_b
    )
    assert np.allclose(new.K_f, [0.0, 0.0, beta], atol=1e-14)
    assert np.allclose(new.m_f, [0.0, 0.0, 100.0 * beta], atol=1e-12)
    assert np.allclose(new.psi_f[:, 2], beta * mesh.faces)
    assert is_rotation(new.Lambda_f)
    assert is_rotation(new.Lambda_c)


@pytest.mark.unit
def test_uniform_twist(straight_beam, bending_material):
    mesh, geom = straight_beam
    tau = 0.15
    dpsi_c = np.zeros((10, 3))
    dpsi_c[:, 0] = tau * mesh.cell_centres
    dpsi_b = np.array([[0.0, 0.0, 0.0], [tau * mesh.length, 0.0, 0.0]])
    new = update_state(
        BeamState.initial(mesh, geom), np.zeros((10, 3)), dpsi_c, geom, mesh, bending_material, dpsi_b=dpsi_b
    )
    assert np.allclose(new.K_f, [tau, 0.0, 0.0], atol=1e-14)
    # twisting a straight centre line leaves it unstretched
    assert np.allclose(new.Gamma_f, 0.0, atol=1e-14)
    by_definition = rotational_strain_by_definition(new, geom, mesh)
    assert np.allclose(by_definition[:, 0], tau * np.sin(tau * mesh.cell_length) / (tau * mesh.cell_length))


@pytest.mark.unit
def test_rotated_state_pulls_increments_back(straight_beam, bending_material):
    mesh, geom = straight_beam
    first = np.tile([0.0, 0.0, 0.5], (10, 1))
    second = np.tile([0.3, 0.0, 0.0], (10, 1))
    b1 = np.array([[0.0, 0.0, 0.5], [0.0, 0.0, 0.5]])
    b2 = np.array([[0.3, 0.0, 0.0], [0.3, 0.0, 0.0]])
    state = BeamState.initial(mesh, geom)
    state = update_state(state, np.zeros((10, 3)), first, geom, mesh, bending_material, dpsi_b=b1)
    state = update_state(state, np.zeros((10, 3)), second, geom, mesh, bending_material, dpsi_b=b2)
    # a spatial x-rotation after a z-rotation is pulled back through the first rotation
    lam1 = np.array([[np.cos(0.5), -np.sin(0.5), 0.0], [np.sin(0.5), np.cos(0.5), 0.0], [0.0, 0.0, 1.0]])
    expected = np.array([0.0, 0.0, 0.5]) + lam1.T @ np.array([0.3, 0.0, 0.0])
    assert np.allclose(state.psi_c, expected)
    assert np.allclose(state.psi_f, expected)
    # uniform rotations leave the curvature at zero
    assert np.allclose(state.K_f, 0.0, atol=1e-14)


@pytest.mark.unit
def test_oversized_face_increment_is_rejected(straight_beam, bending_material):
    mesh, geom = straight_beam
    dpsi_c = np.tile([0.0, 3.5, 0.0], (10, 1))
    with pytest.raises(RotationDomainError):
        update_state(BeamState.initial(mesh, geom), np.zeros((10, 3)), dpsi_c, geom, mesh, bending_material)


@pytest.mark.unit
def test_energy_of_the_unstrained_state_is_zero(straight_beam, bending_material):
    mesh, geom = straight_beam
    state = BeamState.initial(mesh, geom)
    assert strain_energy(state, mesh, bending_material) == 0.0
    assert np.array_equal(energy_density(state, bending_material), np.zeros(11))


@pytest.mark.unit
def test_energy_of_uniform_twist(straight_beam, bending_material):
    mesh, geom = straight_beam
    tau = 0.1
    dpsi_c = np.zeros((10, 3))
    dpsi_c[:, 0] = tau * mesh.cell_centres
    dpsi_b = np.array([[0.0, 0.0, 0.0], [tau * mesh.length, 0.0, 0.0]])
    state = update_state(
        BeamState.initial(mesh, geom), np.zeros((10, 3)), dpsi_c, geom, mesh, bending_material, dpsi_b=dpsi_b
    )
    assert strain_energy(state, mesh, bending_material) == pytest.approx(0.5 * 100.0 * tau**2 * mesh.length)


@pytest.mark.unit
def test_accumulated_curvature_agrees_with_the_frame_definition(bending_material):
    gaps = curvature_route_gaps(bending_material, (10, 20, 40))
    assert gaps[1] < gaps[0] / 3.0
    assert gaps[2] < gaps[1] / 3.0
    assert convergence_order(gaps, [0.2, 0.1, 0.05]) == pytest.approx(2.0, abs=0.2)


@pytest.mark.unit
class TestRebuildCentreLine:
    def test_undeformed_arc_is_reproduced(self, bent_beam, bending_material):
        mesh, geom = bent_beam
        state = BeamState.initial(mesh, geom)
        for anchor in ("west", "east"):
            rebuilt = rebuild_centre_line(state, state.Gamma_f, geom, mesh, bending_material, anchor=anchor)
            assert np.allclose(rebuilt.w_c, 0.0, atol=1e-10)
            assert np.allclose(rebuilt.w_f, 0.0, atol=1e-10)

    def test_rigidly_rotated_frames_swing_the_arc_about_the_anchor(self, bent_beam, bending_material):
        mesh, geom = bent_beam
        R = exp_so3(np.array([0.4, -0.3, 1.1]))
        state = BeamState.initial(mesh, geom)
        state.Lambda_f[:] = R
        state.Lambda_c[:] = R
        rebuilt = rebuild_centre_line(state, np.zeros((mesh.n_faces, 3)), geom, mesh, bending_material, anchor="west")
        expected = (geom.r0_c - geom.r0_f[0]) @ (R - np.eye(3)).T
        assert np.allclose(rebuilt.w_c, expected, atol=1e-10)
        assert np.allclose(rebuilt.w_f[0], 0.0)
        assert np.allclose(rebuilt.Gamma_f, 0.0, atol=1e-11)
        assert np.allclose(rebuilt.n_f, 0.0, atol=1e-6)

    @pytest.mark.parametrize("anchor", ["west", "east"])
    def test_imposed_strain_is_recovered_and_the_anchor_stays(self, anchor, bent_beam, bending_material, rng):
        mesh, geom = bent_beam
        state = random_state(mesh, geom, bending_material, rng)
        strain = 0.01 * rng.uniform(-1.0, 1.0, (mesh.n_faces, 3))
        rebuilt = rebuild_centre_line(state, strain, geom, mesh, bending_material, anchor=anchor)
        end = 0 if anchor == "west" else -1
        assert np.allclose(rebuilt.w_f[end], state.w_f[end], atol=1e-10)
        assert np.allclose(rebuilt.Gamma_f, strain, atol=1e-11)
        assert np.array_equal(rebuilt.Lambda_f, state.Lambda_f)
        assert np.array_equal(rebuilt.K_f, state.K_f)
