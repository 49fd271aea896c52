from __future__ import annotations

import hypothesis
import numpy as np
import pytest

from fvbeam.geometry import BeamMesh, InitialGeometry, build_uniform_mesh, make_arc, make_straight
from fvbeam.state import Material

hypothesis.settings.register_profile("fvbeam", deadline=None, max_examples=50)
hypothesis.settings.load_profile("fvbeam")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def bending_material() -> Material:
    """Section stiffness of the 10 m cantilever benchmarks."""
    return Material.from_products(1.0e4, 5.0e3, 5.0e3, 100.0, 100.0, 100.0)


@pytest.fixture
def straight_beam() -> tuple[BeamMesh, InitialGeometry]:
    mesh = build_uniform_mesh(10.0, 10)
    return mesh, make_straight(10.0, mesh)


@pytest.fixture
def bent_beam() -> tuple[BeamMesh, InitialGeometry]:
    """45 degree arc of radius 100 m on 8 cells."""
    radius, span = 100.0, np.pi / 4.0
    mesh = build_uniform_mesh(radius * span, 8)
    return mesh, make_arc(radius, span, mesh)
