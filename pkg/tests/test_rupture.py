"""Tests for the zone elasticity solve: liftings, patch/rigid exactness,
linearity, and boundary diagnostics."""

import numpy as np
import pytest

from stenofsi import fem
from stenofsi.geometry import BoundaryLabel, rectangle_mesh
from stenofsi.materials import LameParams, hooke_stress, max_shear
from stenofsi.rupture import (ClotProblem, build_lifting, clot_solve,
                              nodal_lifting, zone_diagnostics)

LAME = LameParams(youngs_modulus=5.0e4, poisson=0.3)

G1 = BoundaryLabel.ZONE_GAMMA1
G2 = BoundaryLabel.ZONE_GAMMA2


def _gamma_edges(zone):
    return (zone.edges_with_label(G1), zone.edges_with_label(G2))


def _edge_node_coords(zone, edges):
    space = fem.FeSpace(zone, degree=2, arity=1)
    return space.dof_coords()[space.edge_dof_ids(edges)]    # (m, 3, 2)


def _linear_disp(coords, a, b):
    # u(x) = A x + b applied to (..., 2) coordinates
    return coords @ a.T + b


# ---------------------------------------------------------------------------
# liftings
# ---------------------------------------------------------------------------


def test_harmonic_lifting_of_constant_is_constant(zone_rectangle):
    g1, g2 = _gamma_edges(zone_rectangle)
    data = np.tile(np.array([1.5, -0.5]), (g2.shape[0], 3, 1))
    lift = build_lifting(zone_rectangle, data)
    n = lift.space.n_scalar
    assert np.max(np.abs(lift.values[:n] - 1.5)) < 1e-10
    assert np.max(np.abs(lift.values[n:] + 0.5)) < 1e-10


def test_nodal_lifting_has_minimal_support(zone_rectangle):
    _, g2 = _gamma_edges(zone_rectangle)
    data = np.tile(np.array([2.0, 3.0]), (g2.shape[0], 3, 1))
    lift = nodal_lifting(zone_rectangle, data)
    space = fem.FeSpace(zone_rectangle, degree=2, arity=1)
    ids = np.unique(space.edge_dof_ids(g2))
    n = space.n_dof
    assert np.allclose(lift.values[ids], 2.0)
    assert np.allclose(lift.values[ids + n], 3.0)
    others = np.setdiff1d(np.arange(n), ids)
    assert np.max(np.abs(lift.values[others])) == 0.0
    assert np.max(np.abs(lift.values[others + n])) == 0.0


def test_pure_neumann_zone_is_rejected():
    mesh = rectangle_mesh(4, 3, labels=(G1, G1, G1, G1))
    with pytest.raises(ValueError, match="ZONE_GAMMA2"):
        build_lifting(mesh, None)
    with pytest.raises(ValueError, match="ZONE_GAMMA2"):
        clot_solve(ClotProblem(zone=mesh, lame=LAME))


# ---------------------------------------------------------------------------
# problem validation
# ---------------------------------------------------------------------------


def test_problem_validates_data_shapes(zone_rectangle):
    g1, g2 = _gamma_edges(zone_rectangle)
    with pytest.raises(ValueError, match="shape"):
        ClotProblem(zone=zone_rectangle, lame=LAME,
                    gamma1_traction=np.zeros((g1.shape[0], 2, 2)))
    with pytest.raises(ValueError, match="shape"):
        ClotProblem(zone=zone_rectangle, lame=LAME,
                    gamma2_displacement=np.zeros((g2.shape[0] + 1, 3, 2)))
    with pytest.raises(ValueError, match="non-finite"):
        ClotProblem(zone=zone_rectangle, lame=LAME,
                    gamma1_traction=np.full((g1.shape[0], 3, 2), np.nan))


# ---------------------------------------------------------------------------
# exactness
# ---------------------------------------------------------------------------


def test_zero_data_gives_zero_displacement(zone_rectangle):
    sol = clot_solve(ClotProblem(zone=zone_rectangle, lame=LAME))
    assert np.max(np.abs(sol.u.values)) <= 1e-9
    assert np.max(np.abs(sol.zeta.values)) <= 1e-9


def test_rigid_translation_is_exact(zone_rectangle):
    _, g2 = _gamma_edges(zone_rectangle)
    c = np.array([0.4, -1.2])
    data = np.tile(c, (g2.shape[0], 3, 1))
    sol = clot_solve(ClotProblem(zone=zone_rectangle, lame=LAME,
                                 gamma2_displacement=data))
    n = sol.u.space.n_scalar
    assert np.max(np.abs(sol.u.values[:n] - c[0])) <= 1e-9
    assert np.max(np.abs(sol.u.values[n:] - c[1])) <= 1e-9


def _patch_problem(zone, a, b):
    """Dirichlet+traction data of the linear field u = A x + b."""
    g1, g2 = _gamma_edges(zone)
    eps = 0.5 * (a + a.T)
    sigma = hooke_stress(eps, LAME)
    g2_disp = _linear_disp(_edge_node_coords(zone, g2), a, b)
    eb = fem.EdgeBatch(zone, g1)
    t_edge = eb.normals @ sigma.T                           # (m, 2)
    g1_trac = np.repeat(t_edge[:, None, :], 3, axis=1)
    return ClotProblem(zone=zone, lame=LAME, gamma1_traction=g1_trac,
                       gamma2_displacement=g2_disp), sigma


def test_linear_patch_is_exact(zone_rectangle):
    a = np.array([[0.02, -0.01], [0.03, 0.015]])
    b = np.array([0.1, -0.2])
    prob, _ = _patch_problem(zone_rectangle, a, b)
    sol = clot_solve(prob)
    space = fem.FeSpace(zone_rectangle, degree=2, arity=1)
    expected = _linear_disp(space.dof_coords(), a, b)
    n = space.n_dof
    got = np.column_stack([sol.u.values[:n], sol.u.values[n:]])
    assert np.max(np.abs(got - expected)) <= 1e-9


def test_solution_is_lifting_independent(zone_rectangle):
    a = np.array([[0.01, 0.02], [-0.015, 0.03]])
    b = np.array([-0.05, 0.08])
    prob, _ = _patch_problem(zone_rectangle, a, b)
    harmonic = clot_solve(prob)
    rough = clot_solve(prob, lifting=nodal_lifting(
        zone_rectangle, prob.gamma2_displacement))
    assert np.max(np.abs(harmonic.u.values - rough.u.values)) <= 1e-9
    # the split itself does differ
    assert np.max(np.abs(harmonic.lifting.values
                         - rough.lifting.values)) > 1e-3


def test_solver_is_linear_in_the_data(zone_rectangle, rng):
    g1, g2 = _gamma_edges(zone_rectangle)
    trac = rng.normal(size=(g1.shape[0], 3, 2))
    disp = 0.01 * rng.normal(size=(g2.shape[0], 3, 2))
    base = clot_solve(ClotProblem(zone=zone_rectangle, lame=LAME,
                                  gamma1_traction=trac,
                                  gamma2_displacement=disp))
    scaled = clot_solve(ClotProblem(zone=zone_rectangle, lame=LAME,
                                    gamma1_traction=2.5 * trac,
                                    gamma2_displacement=2.5 * disp))
    assert np.max(np.abs(scaled.u.values - 2.5 * base.u.values)) <= 1e-9 \
        * max(1.0, np.max(np.abs(scaled.u.values)))


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def _constant_solution(zone, c):
    vspace = fem.FeSpace(zone, degree=2, arity=2)
    n = vspace.n_scalar
    vals = np.concatenate([np.full(n, c[0]), np.full(n, c[1])])
    from stenofsi.rupture import ClotSolution
    f = fem.Field(vspace, vals)
    return ClotSolution(u=f, zeta=f, lifting=vspace.zero_field(), lame=LAME)


def test_diagnostics_constant_displacement(zone_rectangle):
    g1, _ = _gamma_edges(zone_rectangle)
    sol = _constant_solution(zone_rectangle, (3.0, 4.0))
    sig = np.zeros((g1.shape[0], 3, 2, 2))
    d = zone_diagnostics(sol, sig)
    assert abs(d.u_avg_zone - 5.0) < 1e-12
    assert abs(d.u_avg_gamma1 - 5.0) < 1e-12
    assert abs(d.u_avg_gamma2 - 5.0) < 1e-12
    assert d.traction_magnitude == 0.0
    assert d.max_shear_avg_gamma1 == 0.0
    assert np.max(np.abs(d.max_shear_zone.values)) < 1e-12


def test_diagnostics_uniform_pressure_traction(zone_rectangle):
    # sigma = -Id on Gamma1: traction -n averaged over left/right/top of the
    # 1.6 x 0.9 rectangle; the side contributions cancel, the top gives
    # (0, -1.6)/3.4. Maximum shear of -Id is zero.
    g1, _ = _gamma_edges(zone_rectangle)
    sol = _constant_solution(zone_rectangle, (0.0, 0.0))
    sig = np.tile(-np.eye(2), (g1.shape[0], 3, 1, 1))
    d = zone_diagnostics(sol, sig)
    np.testing.assert_allclose(d.traction_avg, [0.0, -1.6 / 3.4], atol=1e-12)
    assert abs(d.traction_magnitude - 1.6 / 3.4) < 1e-12
    assert abs(d.max_shear_avg_gamma1) < 1e-12


def test_diagnostics_pure_shear_stress(zone_rectangle):
    g1, _ = _gamma_edges(zone_rectangle)
    sol = _constant_solution(zone_rectangle, (0.0, 0.0))
    shear = np.array([[0.0, 1.0], [1.0, 0.0]])
    sig = np.tile(shear, (g1.shape[0], 3, 1, 1))
    d = zone_diagnostics(sol, sig)
    assert abs(d.max_shear_avg_gamma1 - 1.0) < 1e-12


def test_diagnostics_patch_solution_stress(zone_rectangle):
    # For the exact linear solution the zone stress is the constant Hooke
    # stress, so the interior maximum-shear field is constant too.
    a = np.array([[0.02, -0.01], [0.03, 0.015]])
    b = np.array([0.0, 0.0])
    prob, sigma = _patch_problem(zone_rectangle, a, b)
    sol = clot_solve(prob)
    g1, _ = _gamma_edges(zone_rectangle)
    d = zone_diagnostics(sol, np.zeros((g1.shape[0], 3, 2, 2)))
    expected = max_shear(sigma[None])[0]
    assert np.max(np.abs(d.max_shear_zone.values - expected)) < 1e-8


def test_diagnostics_validates_stress_shape(zone_rectangle):
    sol = _constant_solution(zone_rectangle, (1.0, 0.0))
    with pytest.raises(ValueError, match="shape"):
        zone_diagnostics(sol, np.zeros((1, 3, 2, 2)))
