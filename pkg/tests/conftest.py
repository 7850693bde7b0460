"""Shared fixtures: meshes reused across test modules."""

import numpy as np
import pytest

from stenofsi.geometry import (BoundaryLabel, StenosisGeometry,
                               build_stenosed_artery, rectangle_mesh)


@pytest.fixture(scope="session")
def artery_mesh():
    """The default stenosed-channel mesh (shared, treated as read-only)."""
    return build_stenosed_artery(StenosisGeometry())


@pytest.fixture(scope="session")
def coarse_artery_mesh():
    """A coarser artery mesh for the slower solver tests."""
    return build_stenosed_artery(StenosisGeometry(mesh_size=0.16))


@pytest.fixture()
def unit_square():
    return rectangle_mesh(8, 8)


@pytest.fixture()
def zone_rectangle():
    """A rectangle labeled like a detected zone: bottom = Gamma2, rest Gamma1."""
    g1, g2 = BoundaryLabel.ZONE_GAMMA1, BoundaryLabel.ZONE_GAMMA2
    return rectangle_mesh(8, 5, width=1.6, height=0.9, origin=(0.3, -0.2),
                          labels=(g1, g1, g2, g1))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240814)
