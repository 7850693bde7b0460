"""Staggered fluid-structure coupling on conforming interface meshes.

One coupling step runs: (1) a fluid solve on the current lumen mesh, (2)
nodal transfer of the fluid Cauchy stress to the reference wall interface,
(3) a quasi-static Newton solve of the wall, and (4) a harmonic extension of
the wall interface displacement into the lumen, which moves the fluid mesh
and supplies the next domain velocity.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import fem, geometry
from .fluid import FluidParams, FluidState, fluid_step, initial_fluid_state
from .geometry import BoundaryLabel, Subdomain
from .materials import (CarreauParams, HyperelasticParams,
                        ModifiedCarreauModel, PlainCarreauModel,
                        shear_rate_field)
from .structure import (InterfaceTraction, NewtonParams, SolidState,
                        newton_solve, reference_state)

__all__ = [
    "CoupledMeshes", "build_coupled_meshes", "BoundaryField",
    "HarmonicExtender", "harmonic_extend", "fluid_stress_at_vertices",
    "interface_traction", "traction_vectors", "domain_velocity",
    "CouplingConfig", "CouplingState", "initial_coupling_state",
    "StepDiagnostics", "coupling_step",
]


# ---------------------------------------------------------------------------
# mesh pairing
# ---------------------------------------------------------------------------


@dataclass
class CoupledMeshes:
    """Reference lumen/wall meshes with their aligned interface numbering.

    ``fluid_edges``/``wall_edges`` list the same physical interface edges in
    the same order with ends in the same order; ``fluid_nodes``/``wall_nodes``
    are aligned degree-2 scalar dof ids (vertices then midpoints de-duplicated
    in first-occurrence order).
    """

    reference: object
    lumen: object
    wall: object
    fluid_edges: np.ndarray
    wall_edges: np.ndarray
    fluid_nodes: np.ndarray
    wall_nodes: np.ndarray


def build_coupled_meshes(full_mesh) -> CoupledMeshes:
    """Split a two-subdomain mesh and align the interface numbering."""
    lumen = geometry.subdomain_mesh(full_mesh, Subdomain.LUMEN)
    wall = geometry.subdomain_mesh(full_mesh, Subdomain.WALL)

    def aligned_edges(mesh):
        edges = mesh.edges_with_label(BoundaryLabel.INTERFACE)
        parent = mesh.parent_vertices[edges]
        # Ends ordered by parent id, then edges ordered lexicographically.
        flip = parent[:, 0] > parent[:, 1]
        edges = edges.copy()
        edges[flip] = edges[flip][:, ::-1]
        parent[flip] = parent[flip][:, ::-1]
        order = np.lexsort((parent[:, 1], parent[:, 0]))
        return edges[order], parent[order]

    fluid_edges, pf = aligned_edges(lumen)
    wall_edges, pw = aligned_edges(wall)
    if pf.shape != pw.shape or not np.array_equal(pf, pw):
        raise ValueError("lumen and wall interface edge sets do not match")

    vf = fem.FeSpace(lumen, degree=2, arity=1)
    vw = fem.FeSpace(wall, degree=2, arity=1)
    idsf = vf.edge_dof_ids(fluid_edges).ravel()
    idsw = vw.edge_dof_ids(wall_edges).ravel()
    _, first = np.unique(idsf, return_index=True)
    first.sort()
    fluid_nodes = idsf[first]
    wall_nodes = idsw[first]

    cf = vf.dof_coords()[fluid_nodes]
    cw = vw.dof_coords()[wall_nodes]
    if not np.allclose(cf, cw, atol=1e-12):
        raise ValueError("interface node coordinates do not match between "
                         "the lumen and wall meshes")
    return CoupledMeshes(reference=full_mesh, lumen=lumen, wall=wall,
                         fluid_edges=fluid_edges, wall_edges=wall_edges,
                         fluid_nodes=fluid_nodes, wall_nodes=wall_nodes)


# ---------------------------------------------------------------------------
# harmonic extension
# ---------------------------------------------------------------------------


@dataclass
class BoundaryField:
    """Values attached to degree-2 scalar dof ids on a mesh boundary."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.int64).ravel()
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != self.nodes.shape[0]:
            raise ValueError("boundary values must align with boundary nodes")


class HarmonicExtender:
    """Componentwise discrete harmonic extension into a fixed mesh.

    The vertex field solves the degree-1 Laplace problem (an M-matrix on
    Delaunay meshes, hence a discrete maximum principle); midpoint dofs are
    set to the data where given and to edge-endpoint averages elsewhere.
    Boundary vertices without data are held at zero.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.p1 = fem.FeSpace(mesh, degree=1, arity=1)
        self.p2 = fem.FeSpace(mesh, degree=2, arity=2)
        batch = fem.ElementBatch(mesh, fem.quadrature_rule(2))
        k = fem.scalar_stiffness(batch, self.p1)
        nv = mesh.n_vertices
        boundary = np.unique(mesh.boundary_edges)
        interior = np.setdiff1d(np.arange(nv), boundary)
        self.boundary_vertices = boundary
        self.interior = interior
        self.k_ib = k[interior][:, boundary].tocsc()
        import scipy.sparse.linalg as spla
        self.lu = spla.splu(k[interior][:, interior].tocsc())

    def extend(self, data: BoundaryField) -> fem.Field:
        mesh = self.mesh
        nv = mesh.n_vertices
        nsc = self.p2.n_scalar
        values = np.atleast_2d(np.asarray(data.values, dtype=float))
        if values.shape == (1, data.nodes.size):
            values = values.T
        ncomp = values.shape[1]
        if ncomp != 2:
            raise ValueError("extension data must have two components")

        given = np.zeros((nsc, 2))
        has_data = np.zeros(nsc, dtype=bool)
        given[data.nodes] = values
        has_data[data.nodes] = True

        out = np.zeros((nsc, 2))
        for c in range(2):
            ub = np.zeros(nv)
            ub[self.boundary_vertices] = given[self.boundary_vertices, c]
            rhs = -self.k_ib @ ub[self.boundary_vertices]
            ui = self.lu.solve(rhs)
            vert = np.zeros(nv)
            vert[self.boundary_vertices] = ub[self.boundary_vertices]
            vert[self.interior] = ui
            out[:nv, c] = vert
        # Midpoints: endpoint averages, overridden by data where present.
        edges = mesh.edges()
        mids = np.arange(nv, nsc)
        out[mids] = 0.5 * (out[edges[:, 0]] + out[edges[:, 1]])
        out[has_data] = given[has_data]
        return fem.Field(self.p2, np.concatenate([out[:, 0], out[:, 1]]))


def harmonic_extend(ref_lumen, interface_disp: BoundaryField) -> fem.Field:
    """Extend interface displacement data harmonically into the lumen.

    Boundary vertices not covered by the data (the inlet and outlet) are
    held at zero. The extender is cached on the mesh.
    """
    cache = ref_lumen._cache
    if "harmonic_extender" not in cache:
        cache["harmonic_extender"] = HarmonicExtender(ref_lumen)
    return cache["harmonic_extender"].extend(interface_disp)


# ---------------------------------------------------------------------------
# traction transfer
# ---------------------------------------------------------------------------


def fluid_stress_at_vertices(state: FluidState, mu_field) -> np.ndarray:
    """Cauchy stress 2 mu D(v) - p Id at mesh vertices: (nv, 2, 2)."""
    from .analysis import fluid_stress_tensor
    return fluid_stress_tensor(state.v, state.p, mu_field)


def interface_traction(state: FluidState, mu_field,
                       coupled: CoupledMeshes) -> InterfaceTraction:
    """Fluid Cauchy-stress data on the reference wall interface edges.

    The fluid mesh is the deformed lumen, so evaluating at the matched
    interface nodes realizes the composition with the current deformation.
    Midpoint tensors come from the degree-1 stress (endpoint averages).
    """
    sig_v = fluid_stress_at_vertices(state, mu_field)
    e = coupled.fluid_edges
    m = e.shape[0]
    sigma = np.empty((m, 3, 2, 2))
    sigma[:, 0] = sig_v[e[:, 0]]
    sigma[:, 1] = sig_v[e[:, 1]]
    sigma[:, 2] = 0.5 * (sigma[:, 0] + sigma[:, 1])
    return InterfaceTraction(coupled.wall_edges, sigma)


def traction_vectors(state: FluidState, mu_field, edges) -> np.ndarray:
    """Traction -sigma_f n_f per edge node: (m, 3, 2).

    ``n_f`` is the outward fluid normal of each edge; the sign follows the
    action-reaction convention (the force the fluid exerts on the wall).
    """
    sig_v = fluid_stress_at_vertices(state, mu_field)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    eb = fem.EdgeBatch(state.mesh, edges)
    sigma = np.empty((edges.shape[0], 3, 2, 2))
    sigma[:, 0] = sig_v[edges[:, 0]]
    sigma[:, 1] = sig_v[edges[:, 1]]
    sigma[:, 2] = 0.5 * (sigma[:, 0] + sigma[:, 1])
    return -np.einsum("mbij,mj->mbi", sigma, eb.normals)


def domain_velocity(xi_new: fem.Field, xi_old: fem.Field,
                    dt: float) -> fem.Field:
    """Finite-difference mesh velocity (xi_new - xi_old) / dt."""
    if xi_new.space is not xi_old.space and \
            xi_new.space.n_dof != xi_old.space.n_dof:
        raise ValueError("displacement fields live in different spaces")
    return fem.Field(xi_new.space, (xi_new.values - xi_old.values) / dt)


# ---------------------------------------------------------------------------
# the coupling loop
# ---------------------------------------------------------------------------


@dataclass
class CouplingConfig:
    """Sub-solver parameter bundle for the coupled stepping loop."""

    fluid: FluidParams = dc_field(default_factory=FluidParams)
    material: HyperelasticParams = dc_field(
        default_factory=HyperelasticParams)
    newton: NewtonParams = dc_field(default_factory=NewtonParams)
    carreau: CarreauParams = dc_field(default_factory=CarreauParams)
    history_viscosity: bool = True


@dataclass
class CouplingState:
    """Everything evolving across coupled time steps."""

    n: int
    t: float
    coupled: CoupledMeshes
    fluid: FluidState          # on the current (moved) lumen mesh
    solid: SolidState          # on the reference wall mesh
    xi_f: fem.Field            # ALE displacement on the reference lumen mesh
    viscosity_model: object
    mu: fem.Field              # current viscosity (degree 1, g/(cm s))


@dataclass
class StepDiagnostics:
    """Per-step record of the coupling loop."""

    n: int
    t: float
    newton_iterations: int
    newton_converged: bool
    min_quality: float
    max_speed: float
    divergence: float
    viscosity_min: float
    viscosity_max: float
    max_interface_displacement: float


def initial_coupling_state(full_mesh, cfg: CouplingConfig) -> CouplingState:
    """Fluid at rest, wall at its reference state, zero mesh displacement."""
    coupled = build_coupled_meshes(full_mesh)
    fluid = initial_fluid_state(coupled.lumen)
    solid = reference_state(coupled.wall, cfg.material)
    xi = fem.FeSpace(coupled.lumen, degree=2, arity=2).zero_field()
    model = (ModifiedCarreauModel(cfg.carreau) if cfg.history_viscosity
             else PlainCarreauModel(cfg.carreau))
    mu0 = fem.Field(fem.FeSpace(coupled.lumen, 1, 1),
                    np.full(coupled.lumen.n_vertices, cfg.carreau.mu0))
    return CouplingState(n=0, t=0.0, coupled=coupled, fluid=fluid,
                         solid=solid, xi_f=xi, viscosity_model=model, mu=mu0)


def coupling_step(state: CouplingState, cfg: CouplingConfig) -> tuple:
    """Advance the coupled system one step; returns (state, diagnostics).

    Sub-solver failures are annotated with the step that raised them.
    """
    coupled = state.coupled
    dt = cfg.fluid.dt
    t_next = state.t + dt

    # (0) viscosity from the current velocity (previous step's field).
    try:
        gamma = shear_rate_field(state.fluid.v)
        mu = state.viscosity_model.step(gamma, state.t)
    except Exception as exc:
        raise RuntimeError(f"coupling step {state.n + 1}, viscosity update: "
                           f"{exc}") from exc

    # (1) fluid solve on the current lumen mesh.
    try:
        fluid = fluid_step(state.fluid, mu, cfg.fluid, t_next)
    except Exception as exc:
        raise RuntimeError(f"coupling step {state.n + 1}, fluid solve: "
                           f"{exc}") from exc

    # (2) traction transfer to the reference wall interface.
    traction = interface_traction(fluid, mu, coupled)

    # (3) quasi-static wall solve (chained initial guess).
    try:
        solid, report = newton_solve(state.solid, traction, cfg.material,
                                     cfg.newton)
    except Exception as exc:
        raise RuntimeError(f"coupling step {state.n + 1}, wall solve: "
                           f"{exc}") from exc

    # (4) harmonic extension, mesh motion, domain velocity.
    xi_s = solid.xi_s
    nsw = solid.phi.space.n_scalar
    disp = np.column_stack([xi_s.values[coupled.wall_nodes],
                            xi_s.values[coupled.wall_nodes + nsw]])
    try:
        xi_new = harmonic_extend(coupled.lumen,
                                 BoundaryField(coupled.fluid_nodes, disp))
    except Exception as exc:
        raise RuntimeError(f"coupling step {state.n + 1}, mesh extension: "
                           f"{exc}") from exc
    w = domain_velocity(xi_new, state.xi_f, dt)

    nv = coupled.lumen.n_vertices
    moved = coupled.lumen.with_vertices(
        coupled.lumen.vertices
        + np.column_stack([xi_new.values[:nv],
                           xi_new.values[xi_new.space.n_scalar:][:nv]]))
    vspace = fem.FeSpace(moved, degree=2, arity=2)
    qspace = fem.FeSpace(moved, degree=1, arity=1)
    fluid = FluidState(v=fem.Field(vspace, fluid.v.values),
                       p=fem.Field(qspace, fluid.p.values),
                       mesh=moved,
                       w=fem.Field(vspace, w.values),
                       time=t_next)

    new_state = CouplingState(n=state.n + 1, t=t_next, coupled=coupled,
                              fluid=fluid, solid=solid, xi_f=xi_new,
                              viscosity_model=state.viscosity_model, mu=mu)
    speed = np.sqrt(fluid.v.component(0) ** 2 + fluid.v.component(1) ** 2)
    diag = StepDiagnostics(
        n=new_state.n, t=t_next,
        newton_iterations=report.iterations,
        newton_converged=report.converged,
        min_quality=float(moved.quality().min()),
        max_speed=float(speed.max()),
        divergence=float(fem.l2_norm_divergence(fluid.v)),
        viscosity_min=float(mu.values.min()),
        viscosity_max=float(mu.values.max()),
        max_interface_displacement=float(np.abs(disp).max()),
    )
    return new_state, diag
