"""One time step of penalized incompressible flow in a moving domain.

The momentum equation is discretized semi-implicitly on the current mesh:
the time derivative follows characteristics (the previous velocity is
evaluated at upstream feet), the domain-velocity transport and viscous terms
are implicit, and incompressibility is imposed through a pressure penalty.
Velocity/displacement live in the degree-2 space, pressure in degree 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fem
from .geometry import BoundaryLabel, Point2

__all__ = [
    "FluidParams", "FluidState", "initial_fluid_state", "inlet_profile",
    "characteristic_foot", "fluid_step", "steady_stokes",
    "divergence_residual", "boundary_flux",
]

WAVEFORMS = ("continuous", "gated", "steady")


@dataclass(frozen=True)
class FluidParams:
    """Fluid density, pressure penalty, time step, and inlet waveform."""

    rho_f: float = 1.056          # g/cm^3
    epsilon: float = 1.0e-6       # pressure penalty (dimensionless)
    dt: float = 0.01              # s
    inlet_amplitude: float = 5.0  # cm/s, peak of the inlet waveform
    waveform: str = "continuous"

    def __post_init__(self):
        if not self.rho_f > 0:
            raise ValueError(f"rho_f must be positive (got {self.rho_f})")
        if not 0.0 < self.epsilon <= 1.0e-4:
            raise ValueError(
                f"epsilon must lie in (0, 1e-4] (got {self.epsilon})")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive (got {self.dt})")
        if self.inlet_amplitude < 0:
            raise ValueError(f"inlet_amplitude must be nonnegative "
                             f"(got {self.inlet_amplitude})")
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"waveform must be one of {WAVEFORMS} "
                             f"(got {self.waveform!r})")


@dataclass
class FluidState:
    """Velocity, pressure, and domain velocity on the current fluid mesh."""

    v: fem.Field       # vector, degree 2
    p: fem.Field       # scalar, degree 1
    mesh: object
    w: fem.Field       # vector, degree 2 (mesh/domain velocity)
    time: float = 0.0

    def __post_init__(self):
        for name, f in (("v", self.v), ("p", self.p), ("w", self.w)):
            if f.space.mesh is not self.mesh:
                raise ValueError(f"field {name!r} lives on a different mesh")
            if not np.all(np.isfinite(f.values)):
                raise ValueError(f"field {name!r} has non-finite values")


def initial_fluid_state(mesh, time: float = 0.0) -> FluidState:
    """Fluid at rest on the given mesh."""
    vspace = fem.FeSpace(mesh, degree=2, arity=2)
    qspace = fem.FeSpace(mesh, degree=1, arity=1)
    return FluidState(v=vspace.zero_field(), p=qspace.zero_field(),
                      mesh=mesh, w=vspace.zero_field(), time=time)


def inlet_profile(t: float, amplitude: float,
                  waveform: str = "continuous") -> float:
    """Inlet speed at time ``t`` (cm/s).

    ``continuous``: amplitude * sin^2(pi t / 0.5), period 0.5 s.
    ``gated``: the same, but zero on the second half of every 10 s window.
    ``steady``: the amplitude, constant in time (for steady-state tests).
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative (got {t})")
    if waveform == "steady":
        return amplitude
    if waveform == "gated":
        if math.fmod(t, 10.0) >= 5.0:
            return 0.0
    elif waveform != "continuous":
        raise ValueError(f"waveform must be one of {WAVEFORMS} "
                         f"(got {waveform!r})")
    # Reduce to one period first so multiples of the period give exact zeros.
    r = math.fmod(t, 0.5)
    return amplitude * math.sin(2.0 * math.pi * r) ** 2


# ---------------------------------------------------------------------------
# characteristics
# ---------------------------------------------------------------------------


def _project_to_boundary(mesh, pts: np.ndarray) -> np.ndarray:
    """Closest point on the mesh boundary for each input point."""
    e = mesh.boundary_edges
    a = mesh.vertices[e[:, 0]]
    ab = mesh.vertices[e[:, 1]] - a
    denom = np.maximum((ab ** 2).sum(axis=1), 1e-300)
    diff = pts[:, None, :] - a[None, :, :]
    tpar = np.clip((diff * ab[None]).sum(axis=-1) / denom[None], 0.0, 1.0)
    proj = a[None] + tpar[..., None] * ab[None]
    d2 = ((pts[:, None, :] - proj) ** 2).sum(axis=-1)
    best = d2.argmin(axis=1)
    return proj[np.arange(pts.shape[0]), best]


def _transported_values(v_n: fem.Field, pts: np.ndarray, dt: float,
                        hints=None) -> np.ndarray:
    """Evaluate v_n at the characteristic feet of ``pts`` (vectorized).

    Feet landing outside the domain are projected onto the nearest boundary
    point before evaluation.
    """
    mesh = v_n.space.mesh
    vals, inside = v_n.eval_many(pts, hints=hints)
    feet = pts - dt * vals
    locator = v_n._locator()
    tri, bary = locator.locate(feet, hints=hints)
    outside = tri < 0
    if np.any(outside):
        feet = feet.copy()
        feet[outside] = _project_to_boundary(mesh, feet[outside])
        tri2, bary2 = locator.locate(feet[outside], tol=1e-8)
        tri[outside] = tri2
        bary[outside] = bary2
    out = v_n.eval_at_cells(np.maximum(tri, 0), bary)
    still_out = tri < 0
    if np.any(still_out):
        # Round-off can leave a projected point marginally outside; fall
        # back to the value at the nearest mesh vertex.
        nv = v_n.space.n_scalar
        d2 = ((feet[still_out, None, :] - mesh.vertices[None]) ** 2).sum(-1)
        nearest = d2.argmin(axis=1)
        out[still_out, 0] = v_n.values[nearest]
        out[still_out, 1] = v_n.values[nearest + nv]
    return out


def characteristic_foot(v_n: fem.Field, x, dt: float) -> Point2:
    """Upstream foot x - v_n(x) dt, projected to the boundary if outside."""
    pts = np.asarray(x, dtype=float).reshape(1, 2)
    vals, inside = v_n.eval_many(pts)
    if not inside[0]:
        raise fem.OutsideDomainError(tuple(pts[0]))
    foot = pts[0] - dt * vals[0]
    mesh = v_n.space.mesh
    tri, _ = v_n._locator().locate(foot.reshape(1, 2))
    if tri[0] < 0:
        foot = _project_to_boundary(mesh, foot.reshape(1, 2))[0]
    return Point2(float(foot[0]), float(foot[1]))


# ---------------------------------------------------------------------------
# assembly helpers
# ---------------------------------------------------------------------------


def _mu_at_qp(batch: fem.ElementBatch, mu) -> np.ndarray:
    if isinstance(mu, fem.Field):
        mu_qp = batch.values_at_qp(mu)
    else:
        mu_qp = np.full_like(batch.wdet, float(mu))
    if np.any(mu_qp <= 0) or not np.all(np.isfinite(mu_qp)):
        raise ValueError("viscosity must be positive and finite at all "
                         "quadrature points")
    return mu_qp


def _saddle_matrix(batch, vspace, qspace, mu_qp, epsilon,
                   mass_coeff: float = 0.0, w_qp=None, rho: float = 0.0):
    """Block matrix [[A, -C^T], [C, eps M]] of the velocity-pressure system.

    A = mass_coeff * M2 - rho * (w . grad) + viscous(mu); the pressure block
    penalizes divergence so the system is invertible without a pressure
    datum.
    """
    nsc = vspace.n_scalar
    ed2 = vspace.element_dofs()[batch.tri_ids]
    ed1 = qspace.element_dofs()[batch.tri_ids]

    kxx, kxy, kyx, kyy = fem.strain_strain_blocks(batch, mu_qp)
    diag_e = 0.0
    if mass_coeff != 0.0:
        diag_e = mass_coeff * np.einsum("tq,qa,qb->tab", batch.wdet,
                                        batch.vals2, batch.vals2)
    if w_qp is not None and rho != 0.0:
        wdotg = np.einsum("tqi,tqbi->tqb", w_qp, batch.grads2)
        diag_e = diag_e - rho * np.einsum("tq,qa,tqb->tab", batch.wdet,
                                          batch.vals2, wdotg)
    if not np.isscalar(diag_e) or diag_e != 0.0:
        kxx = kxx + diag_e
        kyy = kyy + diag_e

    shape_vv = (nsc, nsc)
    axx = fem.assemble_csr(kxx, ed2, ed2, shape_vv)
    axy = fem.assemble_csr(kxy, ed2, ed2, shape_vv)
    ayx = fem.assemble_csr(kyx, ed2, ed2, shape_vv)
    ayy = fem.assemble_csr(kyy, ed2, ed2, shape_vv)
    cx_e, cy_e = fem.divergence_blocks(batch, qspace, vspace)
    cx = fem.assemble_csr(cx_e, ed1, ed2, (qspace.n_scalar, nsc))
    cy = fem.assemble_csr(cy_e, ed1, ed2, (qspace.n_scalar, nsc))
    m1 = fem.scalar_mass(batch, qspace)
    return sp.bmat([[axx, axy, -cx.T],
                    [ayx, ayy, -cy.T],
                    [cx, cy, epsilon * m1]], format="csr")


def _forcing_rhs(batch, vspace, forcing) -> np.ndarray:
    """Load vector of (f, eta) for a callable forcing((m,2)) -> (m,2)."""
    nsc = vspace.n_scalar
    rhs = np.zeros(2 * nsc)
    if forcing is None:
        return rhs
    qp = batch.qpoints.reshape(-1, 2)
    f_qp = np.asarray(forcing(qp), dtype=float).reshape(
        batch.qpoints.shape[0], -1, 2)
    ed2 = vspace.element_dofs()[batch.tri_ids]
    for comp in range(2):
        fe = np.einsum("tq,qa->ta", batch.wdet * f_qp[..., comp], batch.vals2)
        rhs[comp * nsc:(comp + 1) * nsc] += fem.scatter_vector(
            fe, ed2, nsc)[:]
    return rhs


def _inlet_dirichlet(mesh, vspace, speed: float):
    """Velocity Dirichlet pairs for a parabolic inflow on the inlet edges.

    The profile is zero at the inlet ends and peaks at ``speed`` mid-span,
    directed along +x.
    """
    edges = mesh.edges_with_label(BoundaryLabel.INLET)
    if edges.shape[0] == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    nodes = vspace.nodes_on_edges(edges)
    ys = vspace.dof_coords()[nodes, 1]
    y0, y1 = ys.min(), ys.max()
    span = y1 - y0
    if span <= 0:
        raise ValueError("inlet edges have zero vertical extent")
    s = (ys - y0) / span
    vx = speed * 4.0 * s * (1.0 - s)
    nsc = vspace.n_scalar
    dofs = np.concatenate([nodes, nodes + nsc])
    vals = np.concatenate([vx, np.zeros_like(vx)])
    return dofs, vals


def _interface_dirichlet(mesh, vspace, w: fem.Field):
    """Velocity Dirichlet pairs v = w on the interface edges."""
    edges = mesh.edges_with_label(BoundaryLabel.INTERFACE)
    if edges.shape[0] == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    nodes = vspace.nodes_on_edges(edges)
    nsc = vspace.n_scalar
    dofs = np.concatenate([nodes, nodes + nsc])
    vals = np.concatenate([w.values[nodes], w.values[nodes + nsc]])
    return dofs, vals


def _merge_dirichlet(*pairs):
    """Concatenate (dofs, values) pairs; later pairs win on shared dofs."""
    dofs = np.concatenate([p[0] for p in pairs])
    vals = np.concatenate([p[1] for p in pairs])
    # np.unique keeps the first occurrence; reverse so later pairs win.
    dofs = dofs[::-1]
    vals = vals[::-1]
    uniq, idx = np.unique(dofs, return_index=True)
    return uniq, vals[idx]


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def fluid_step(state: FluidState, mu_field, params: FluidParams,
               t_next: float, forcing=None) -> FluidState:
    """Advance the fluid one time step on the current mesh.

    ``mu_field`` is the viscosity (a degree-1 Field or a constant, in
    g/(cm s)); ``forcing`` is an optional callable giving a body force at
    points (enabled for manufactured-solution tests). The previous velocity
    is transported along characteristics; the inlet carries a parabolic
    profile with peak ``inlet_profile(t_next)``; the interface velocity is
    set to the domain velocity ``state.w``; the outlet is traction-free.
    """
    mesh = state.mesh
    vspace = state.v.space
    qspace = state.p.space
    batch = fem.ElementBatch(mesh, fem.quadrature_rule(5))
    mu_qp = _mu_at_qp(batch, mu_field)
    w_qp = batch.values_at_qp(state.w)
    rho, dt, eps = params.rho_f, params.dt, params.epsilon
    nsc = vspace.n_scalar
    npd = qspace.n_scalar

    matrix = _saddle_matrix(batch, vspace, qspace, mu_qp, eps,
                            mass_coeff=rho / dt, w_qp=w_qp, rho=rho)

    # Transported previous velocity, evaluated at the characteristic feet
    # of the quadrature points (the scalar-heavy point-location loop).
    nq = batch.qpoints.shape[1]
    qp = batch.qpoints.reshape(-1, 2)
    hints = np.repeat(batch.tri_ids, nq)
    v_tilde = _transported_values(state.v, qp, dt, hints=hints)
    v_tilde = v_tilde.reshape(batch.qpoints.shape[0], nq, 2)

    rhs = np.zeros(2 * nsc + npd)
    ed2 = vspace.element_dofs()[batch.tri_ids]
    for comp in range(2):
        fe = np.einsum("tq,qa->ta",
                       batch.wdet * (rho / dt) * v_tilde[..., comp],
                       batch.vals2)
        rhs[comp * nsc:(comp + 1) * nsc] += fem.scatter_vector(fe, ed2, nsc)
    rhs[:2 * nsc] += _forcing_rhs(batch, vspace, forcing)

    speed = inlet_profile(t_next, params.inlet_amplitude, params.waveform)
    dofs, vals = _merge_dirichlet(
        _interface_dirichlet(mesh, vspace, state.w),
        _inlet_dirichlet(mesh, vspace, speed))
    matrix, rhs = fem.apply_dirichlet(matrix, rhs, dofs, vals)

    x = fem.solve_sparse(fem.SparseSystem(matrix, rhs))
    v_new = fem.Field(vspace, x[:2 * nsc])
    p_new = fem.Field(qspace, x[2 * nsc:])
    return FluidState(v=v_new, p=p_new, mesh=mesh, w=state.w, time=t_next)


def steady_stokes(mesh, mu, forcing, velocity_bc, epsilon: float = 1.0e-6):
    """Solve a steady viscous flow problem with full velocity Dirichlet data.

    Shares the velocity-pressure blocks with ``fluid_step`` (no mass or
    transport terms). ``velocity_bc`` maps boundary points (m, 2) to
    velocities (m, 2). Returns (v, p) Fields.
    """
    vspace = fem.FeSpace(mesh, degree=2, arity=2)
    qspace = fem.FeSpace(mesh, degree=1, arity=1)
    batch = fem.ElementBatch(mesh, fem.quadrature_rule(5))
    mu_qp = _mu_at_qp(batch, mu)
    matrix = _saddle_matrix(batch, vspace, qspace, mu_qp, epsilon)
    nsc = vspace.n_scalar
    rhs = np.zeros(2 * nsc + qspace.n_scalar)
    rhs[:2 * nsc] = _forcing_rhs(batch, vspace, forcing)

    nodes = vspace.nodes_on_edges(mesh.boundary_edges)
    pts = vspace.dof_coords()[nodes]
    data = np.asarray(velocity_bc(pts), dtype=float).reshape(-1, 2)
    dofs = np.concatenate([nodes, nodes + nsc])
    vals = np.concatenate([data[:, 0], data[:, 1]])
    matrix, rhs = fem.apply_dirichlet(matrix, rhs, dofs, vals)

    x = fem.solve_sparse(fem.SparseSystem(matrix, rhs))
    return fem.Field(vspace, x[:2 * nsc]), fem.Field(qspace, x[2 * nsc:])


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def divergence_residual(state: FluidState) -> float:
    """L2 norm of the discrete divergence of the velocity."""
    return fem.l2_norm_divergence(state.v)


def boundary_flux(state: FluidState, label) -> float:
    """Volume flux through the edges with ``label``, inward positive."""
    mesh = state.mesh
    edges = mesh.edges_with_label(label)
    if edges.shape[0] == 0:
        return 0.0
    eb = fem.EdgeBatch(mesh, edges)
    vspace = state.v.space
    ids = vspace.edge_dof_ids(edges)
    nsc = vspace.n_scalar
    vx = eb.nodal_values_at_qp(state.v.values[ids])
    vy = eb.nodal_values_at_qp(state.v.values[ids + nsc])
    vn = vx * eb.normals[:, None, 0] + vy * eb.normals[:, None, 1]
    return -float(eb.integrate(vn))
