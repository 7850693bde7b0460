"""Inlet waveform, Stokes solves, transport, and flux diagnostics."""

import numpy as np
import pytest

from stenofsi import fem
from stenofsi.fluid import (FluidParams, FluidState, boundary_flux,
                            characteristic_foot, divergence_residual,
                            fluid_step, initial_fluid_state, inlet_profile,
                            steady_stokes)
from stenofsi.geometry import BoundaryLabel, rectangle_mesh


# ---------------------------------------------------------------------------
# inlet waveform
# ---------------------------------------------------------------------------


def test_waveform_peak_and_zero_exact():
    assert inlet_profile(0.25, 5.0) == 5.0
    assert inlet_profile(0.5, 5.0) == 0.0
    assert inlet_profile(0.0, 5.0) == 0.0
    for k in range(9):
        assert inlet_profile(0.5 * k, 5.0) == 0.0


def test_waveform_periodic_and_bounded():
    t = np.linspace(0.0, 2.0, 401)
    v = np.array([inlet_profile(float(s), 5.0) for s in t])
    assert v.min() >= 0.0 and np.isclose(v.max(), 5.0, rtol=1e-12)
    v_shift = np.array([inlet_profile(float(s) + 0.5, 5.0) for s in t])
    assert np.allclose(v, v_shift, atol=1e-9)
    # sin^2 oracle
    assert np.allclose(v, 5.0 * np.sin(2 * np.pi * t) ** 2, atol=1e-9)


def test_waveform_gated_and_steady():
    for t in (0.25, 2.3, 4.9):
        assert inlet_profile(t, 5.0, "gated") == inlet_profile(t, 5.0)
    for t in (5.0, 7.25, 9.99):
        assert inlet_profile(t, 5.0, "gated") == 0.0
    assert inlet_profile(12.25, 5.0, "gated") == pytest.approx(5.0, rel=1e-9)
    assert inlet_profile(17.25, 5.0, "gated") == 0.0
    assert inlet_profile(123.4, 5.0, "steady") == 5.0
    with pytest.raises(ValueError, match="nonnegative"):
        inlet_profile(-0.1, 5.0)
    with pytest.raises(ValueError, match="waveform"):
        inlet_profile(0.1, 5.0, "square")


def test_fluid_params_validation():
    for bad in (dict(rho_f=0.0), dict(epsilon=0.0), dict(epsilon=1e-3),
                dict(dt=-0.01), dict(inlet_amplitude=-1.0),
                dict(waveform="ramp")):
        with pytest.raises(ValueError):
            FluidParams(**bad)


# ---------------------------------------------------------------------------
# state handling
# ---------------------------------------------------------------------------


def test_initial_state_and_validation(unit_square):
    state = initial_fluid_state(unit_square, time=0.3)
    assert state.time == 0.3
    assert not state.v.values.any() and not state.p.values.any()
    bad = state.v.copy()
    bad.values[0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        FluidState(v=bad, p=state.p, mesh=unit_square, w=state.w)
    other = rectangle_mesh(2, 2)
    with pytest.raises(ValueError, match="different mesh"):
        FluidState(v=initial_fluid_state(other).v, p=state.p,
                   mesh=unit_square, w=state.w)


def test_characteristic_foot_constant_velocity(unit_square):
    vspace = fem.FeSpace(unit_square, 2, 2)
    n = vspace.n_scalar
    v = fem.Field(vspace, np.concatenate([np.full(n, 1.0), np.full(n, 2.0)]))
    foot = characteristic_foot(v, (0.5, 0.5), 0.1)
    assert np.allclose([foot.x, foot.y], [0.4, 0.3], atol=1e-12)


# ---------------------------------------------------------------------------
# steady solves
# ---------------------------------------------------------------------------


def _poiseuille_channel(nx=16, ny=8, length=2.0, height=1.0):
    return rectangle_mesh(nx, ny, width=length, height=height,
                          labels=(BoundaryLabel.INLET, BoundaryLabel.OUTLET,
                                  BoundaryLabel.INTERFACE,
                                  BoundaryLabel.INTERFACE))


def test_enclosed_poiseuille_divergence_bound():
    # Quadratic velocity / linear pressure lie in the discrete spaces, so
    # the only divergence source is the pressure penalty itself.
    mesh = _poiseuille_channel()
    mu, u_max, height = 0.35, 2.0, 1.0
    eps = 1e-6

    def exact_v(pts):
        y = pts[:, 1]
        return np.column_stack([4 * u_max * y * (height - y) / height ** 2,
                                np.zeros(pts.shape[0])])

    v, p = steady_stokes(mesh, mu, None, exact_v, epsilon=eps)
    div = fem.l2_norm_divergence(v)
    assert div <= 10.0 * eps * fem.l2_norm(p)
    # velocity reproduced to the penalty-perturbation level
    vspace = v.space
    err = v.values - np.concatenate([
        exact_v(vspace.dof_coords())[:, 0], exact_v(vspace.dof_coords())[:, 1]])
    assert np.max(np.abs(err)) < 1e-4 * u_max
    # pressure gradient matches -8 mu u_max / h^2 (up to an additive const)
    grad_p = fem.recover_gradient(p)
    interior = np.nonzero(
        (np.abs(mesh.vertices[:, 0] - 1.0) < 0.75)
        & (np.abs(mesh.vertices[:, 1] - 0.5) < 0.4))[0]
    assert np.allclose(grad_p[interior, 0], -8 * mu * u_max / height ** 2,
                       rtol=1e-3)


def test_steady_stokes_manufactured_forcing(unit_square):
    # v = curl(psi) with psi = x^2 (1-x)^2 y^2 (1-y)^2 vanishes on the
    # boundary; compare against the analytic solution on one mesh.
    import sympy as sy
    x, y = sy.symbols("x y")
    psi = (x * (1 - x) * y * (1 - y)) ** 2
    vx_s = sy.diff(psi, y)
    vy_s = -sy.diff(psi, x)
    p_s = x ** 3 + y ** 3 - sy.Rational(1, 2)
    mu = 0.7
    fx_s = -mu * (sy.diff(vx_s, x, 2) + sy.diff(vx_s, y, 2)) + sy.diff(p_s, x)
    fy_s = -mu * (sy.diff(vy_s, x, 2) + sy.diff(vy_s, y, 2)) + sy.diff(p_s, y)
    fns = [sy.lambdify((x, y), e, "numpy") for e in (vx_s, vy_s, fx_s, fy_s)]
    vx_f, vy_f, fx_f, fy_f = fns

    mesh = rectangle_mesh(16, 16)

    def forcing(pts):
        return np.column_stack([fx_f(pts[:, 0], pts[:, 1]),
                                fy_f(pts[:, 0], pts[:, 1])])

    def bc(pts):
        return np.zeros_like(pts)

    v, p = steady_stokes(mesh, mu, forcing, bc)
    coords = v.space.dof_coords()
    exact = np.concatenate([vx_f(coords[:, 0], coords[:, 1]),
                            vy_f(coords[:, 0], coords[:, 1])])
    scale = np.max(np.abs(exact))
    assert np.max(np.abs(v.values - exact)) < 0.02 * scale


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------


def test_fluid_step_pulse_and_flux_balance():
    mesh = _poiseuille_channel(nx=14, ny=7)
    state = initial_fluid_state(mesh)
    params = FluidParams(dt=0.05, inlet_amplitude=5.0)
    mu = 0.35
    for k in range(1, 6):
        state = fluid_step(state, mu, params, t_next=k * params.dt)
    assert np.isclose(state.time, 0.25)
    flux_in = boundary_flux(state, BoundaryLabel.INLET)
    flux_out = -boundary_flux(state, BoundaryLabel.OUTLET)
    # inlet peak: parabolic profile with peak 5 -> flux (2/3)*5*H
    assert flux_in > 2.0
    assert abs(flux_out - flux_in) < 0.05 * flux_in
    # no-slip walls (interface moves with w = 0 here)
    vtop = state.v.eval_many(np.array([[1.0, 1.0], [0.7, 0.0]]))[0]
    assert np.max(np.abs(vtop)) < 1e-12
    # transient divergence sits at discretization level, small against the
    # shear content of the field (measured 0.028 on this mesh)
    from stenofsi.materials import shear_rate_field
    assert divergence_residual(state) < 0.06 * fem.l2_norm(shear_rate_field(state.v))
    # interior speed at the peak of the pulse is of the imposed scale
    mid = state.v.eval_many(np.array([[1.0, 0.5]]))[0]
    assert 2.0 < np.hypot(*mid[0]) < 6.0


def test_fluid_step_at_waveform_zero_decays():
    mesh = _poiseuille_channel(nx=10, ny=5)
    state = initial_fluid_state(mesh)
    params = FluidParams(dt=0.25, inlet_amplitude=5.0)
    state = fluid_step(state, 0.35, params, t_next=0.25)
    peak = np.max(np.abs(state.v.values))
    state = fluid_step(state, 0.35, params, t_next=0.5)
    # inlet now zero; only the transported momentum remains and it decays
    assert np.max(np.abs(state.v.values)) < peak
    flux_in = boundary_flux(state, BoundaryLabel.INLET)
    assert abs(flux_in) < 1e-10


def test_boundary_flux_sign_convention():
    mesh = _poiseuille_channel(nx=6, ny=3, length=1.5, height=1.0)
    state = initial_fluid_state(mesh)
    vspace = state.v.space
    n = vspace.n_scalar
    uniform = fem.Field(vspace, np.concatenate([np.ones(n), np.zeros(n)]))
    state = FluidState(v=uniform, p=state.p, mesh=mesh, w=state.w)
    assert np.isclose(boundary_flux(state, BoundaryLabel.INLET), 1.0,
                      rtol=1e-12)   # inward at the left boundary
    assert np.isclose(boundary_flux(state, BoundaryLabel.OUTLET), -1.0,
                      rtol=1e-12)   # outward at the right boundary
    assert boundary_flux(state, BoundaryLabel.OUTER_WALL) == 0.0
