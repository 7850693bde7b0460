"""Linear-elastic analysis of the detected solidification zone.

The semi-solid zone is modeled as a plane-strain Hookean body loaded by the
blood traction on its blood-facing boundary (ZONE_GAMMA1) and dragged by the
wall displacement on its wall-facing boundary (ZONE_GAMMA2).  The Dirichlet
data is handled through a lifting: the solve is for the homogenized unknown
zeta = u - h (zero on Gamma2), and u = zeta + h is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import fem
from .geometry import BoundaryLabel, Mesh
from .materials import LameParams, hooke_stress, max_shear

__all__ = [
    "ClotProblem",
    "ClotSolution",
    "ZoneDiagnostics",
    "build_lifting",
    "nodal_lifting",
    "clot_solve",
    "zone_diagnostics",
]


def _check_edge_data(name: str, edges: np.ndarray, data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    want = (edges.shape[0], 3, 2)
    if data.shape != want:
        raise ValueError(f"{name} must have shape {want} "
                         f"(one 2-vector per edge node), got {data.shape}")
    if not np.isfinite(data).all():
        raise ValueError(f"{name} contains non-finite values")
    return data


@dataclass(frozen=True)
class ClotProblem:
    """Zone mesh, material, Gamma1 traction data, Gamma2 displacement data.

    ``gamma1_traction`` holds the surface force per unit length on each
    ZONE_GAMMA1 edge as nodal vectors (m1, 3, 2) ordered [end0, end1, mid];
    ``gamma2_displacement`` likewise on ZONE_GAMMA2 edges (m2, 3, 2).
    Either may be None, meaning zero.
    """

    zone: Mesh
    lame: LameParams
    gamma1_traction: np.ndarray | None = None
    gamma2_displacement: np.ndarray | None = None

    def __post_init__(self):
        g1 = self.zone.edges_with_label(BoundaryLabel.ZONE_GAMMA1)
        g2 = self.zone.edges_with_label(BoundaryLabel.ZONE_GAMMA2)
        if self.gamma1_traction is not None:
            object.__setattr__(self, "gamma1_traction",
                               _check_edge_data("gamma1_traction", g1,
                                                self.gamma1_traction))
        if self.gamma2_displacement is not None:
            object.__setattr__(self, "gamma2_displacement",
                               _check_edge_data("gamma2_displacement", g2,
                                                self.gamma2_displacement))


@dataclass(frozen=True)
class ClotSolution:
    """Zone displacement u = zeta + h with its lifting and material."""

    u: fem.Field
    zeta: fem.Field
    lifting: fem.Field
    lame: LameParams


def _gamma2_dirichlet(space: fem.FeSpace, zone: Mesh,
                      data: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    """Scalar node ids on Gamma2 and their (n, 2) displacement values."""
    g2 = zone.edges_with_label(BoundaryLabel.ZONE_GAMMA2)
    if g2.shape[0] == 0:
        raise ValueError(
            "the zone has no ZONE_GAMMA2 edges: a pure-Neumann elasticity "
            "problem is not supported (rigid modes would be unconstrained)")
    ids = space.edge_dof_ids(g2)                        # (m, 3)
    flat = ids.ravel()
    if data is None:
        vals = np.zeros((flat.size, 2))
    else:
        vals = data.reshape(-1, 2)
    # Nodes shared by two edges appear twice; keep the first occurrence
    # (conforming data agrees at shared nodes).
    uniq, first = np.unique(flat, return_index=True)
    return uniq, vals[first]


def build_lifting(zone: Mesh, gamma2_data: np.ndarray | None) -> fem.Field:
    """Discrete harmonic lifting of the Gamma2 displacement data.

    Componentwise harmonic in the degree-2 space with Dirichlet values on
    ZONE_GAMMA2 nodes and natural (zero-Neumann) conditions elsewhere, so a
    constant boundary value lifts to the same constant exactly.
    """
    vspace = fem.FeSpace(zone, degree=2, arity=2)
    sspace = fem.FeSpace(zone, degree=2, arity=1)
    nodes, vals = _gamma2_dirichlet(sspace, zone, gamma2_data)
    batch = fem.ElementBatch(zone, fem.quadrature_rule(2))
    k = fem.scalar_stiffness(batch, sspace)
    n = sspace.n_dof
    out = np.empty(2 * n)
    for comp in range(2):
        kc, rhs = fem.apply_dirichlet(k, np.zeros(n), nodes, vals[:, comp])
        out[comp * n:(comp + 1) * n] = fem.solve_sparse(
            fem.SparseSystem(kc, rhs))
    return fem.Field(vspace, out)


def nodal_lifting(zone: Mesh, gamma2_data: np.ndarray | None) -> fem.Field:
    """Minimal-support lifting: Gamma2 nodes take the data, others zero.

    A valid (if rough) lifting, used to check that the solve does not
    depend on which lifting is chosen.
    """
    vspace = fem.FeSpace(zone, degree=2, arity=2)
    sspace = fem.FeSpace(zone, degree=2, arity=1)
    nodes, vals = _gamma2_dirichlet(sspace, zone, gamma2_data)
    values = np.zeros(2 * sspace.n_dof)
    values[nodes] = vals[:, 0]
    values[nodes + sspace.n_dof] = vals[:, 1]
    return fem.Field(vspace, values)


def _gamma1_load(zone: Mesh, vspace: fem.FeSpace,
                 traction: np.ndarray | None) -> np.ndarray:
    """Load vector of the Gamma1 surface force: f[a] = int f_c . eta_a ds."""
    n = vspace.n_scalar
    out = np.zeros(2 * n)
    if traction is None:
        return out
    g1 = zone.edges_with_label(BoundaryLabel.ZONE_GAMMA1)
    if g1.shape[0] == 0:
        return out
    eb = fem.EdgeBatch(zone, g1)
    sspace = fem.FeSpace(zone, degree=2, arity=1)
    ids = sspace.edge_dof_ids(g1)                       # (m, 3)
    t_qp = eb.nodal_values_at_qp(traction)              # (m, nq, 2)
    fe = np.einsum("mq,qa,mqi->mai", eb.wlen, eb.trace_vals, t_qp)
    for comp in range(2):
        np.add.at(out, ids + comp * n, fe[..., comp])
    return out


def clot_solve(prob: ClotProblem, lifting: fem.Field | None = None) -> ClotSolution:
    """Solve the zone elasticity problem; returns u with zeta and lifting.

    Bilinear form 2*mu_c*(eps(zeta), eps(eta)) + lam_c*(div zeta, div eta);
    the right side carries the Gamma1 traction and the lifting's elastic
    residual assembled weakly.  ``lifting`` defaults to the harmonic
    lifting of the Gamma2 data.
    """
    zone = prob.zone
    vspace = fem.FeSpace(zone, degree=2, arity=2)
    sspace = fem.FeSpace(zone, degree=2, arity=1)
    n = sspace.n_dof
    if lifting is None:
        lifting = build_lifting(zone, prob.gamma2_displacement)
    if lifting.space.n_dof != vspace.n_dof:
        raise ValueError("lifting does not live in the zone's vector space")

    batch = fem.ElementBatch(zone, fem.quadrature_rule(2))
    nq = batch.wdet.shape[1]
    mu_qp = np.full((batch.tri_ids.size, nq), prob.lame.mu)
    lam_qp = np.full_like(mu_qp, prob.lame.lam)
    kxx, kxy, kyx, kyy = fem.strain_strain_blocks(batch, mu_qp, lam_qp)
    ed = vspace.element_dofs()[batch.tri_ids]
    shape = (n, n)
    k = sp.bmat([
        [fem.assemble_csr(kxx, ed, ed, shape), fem.assemble_csr(kxy, ed, ed, shape)],
        [fem.assemble_csr(kyx, ed, ed, shape), fem.assemble_csr(kyy, ed, ed, shape)],
    ], format="csr")

    rhs = _gamma1_load(zone, vspace, prob.gamma1_traction)
    rhs -= k @ lifting.values

    nodes, _ = _gamma2_dirichlet(sspace, zone, prob.gamma2_displacement)
    dir_dofs = np.concatenate([nodes, nodes + n])
    k, rhs = fem.apply_dirichlet(k, rhs, dir_dofs, np.zeros(dir_dofs.size))
    zeta_vals = fem.solve_sparse(fem.SparseSystem(k, rhs))
    zeta = fem.Field(vspace, zeta_vals)
    u = fem.Field(vspace, zeta_vals + lifting.values)
    return ClotSolution(u=u, zeta=zeta, lifting=lifting, lame=prob.lame)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZoneDiagnostics:
    """Space averages over the zone and its boundaries at one instant.

    Displacement averages are of the Euclidean norm; ``traction_avg`` is the
    componentwise average of the fluid traction sigma_f n on Gamma1 (n the
    outward zone normal) and ``traction_magnitude`` its norm;
    ``max_shear_avg_gamma1`` averages the fluid maximum shear stress along
    Gamma1; ``max_shear_zone`` is the degree-1 field of the clot's own
    maximum shear stress inside the zone.
    """

    u_avg_zone: float
    u_avg_gamma1: float
    u_avg_gamma2: float
    traction_avg: np.ndarray
    traction_magnitude: float
    max_shear_avg_gamma1: float
    max_shear_zone: fem.Field


def _boundary_norm_average(zone: Mesh, u: fem.Field,
                           label: BoundaryLabel) -> float:
    edges = zone.edges_with_label(label)
    if edges.shape[0] == 0:
        raise ValueError(f"zone has no {label.name} edges to average over")
    eb = fem.EdgeBatch(zone, edges)
    sspace = fem.FeSpace(zone, degree=2, arity=1)
    ids = sspace.edge_dof_ids(edges)
    n = sspace.n_dof
    nodal = np.stack([u.values[ids], u.values[ids + n]], axis=-1)  # (m, 3, 2)
    qp = eb.nodal_values_at_qp(nodal)                              # (m, nq, 2)
    norm = np.hypot(qp[..., 0], qp[..., 1])
    return float((eb.wlen * norm).sum() / eb.total_length())


def zone_diagnostics(sol: ClotSolution,
                     gamma1_fluid_stress: np.ndarray) -> ZoneDiagnostics:
    """Averages of displacement, blood traction and maximum shear stress.

    ``gamma1_fluid_stress`` holds the fluid Cauchy tensor at the nodes of
    each ZONE_GAMMA1 edge, shape (m1, 3, 2, 2).
    """
    zone = sol.u.space.mesh
    total_area = float(np.abs(zone.signed_areas()).sum())
    if total_area <= 0:
        raise ValueError("zone has zero area")

    batch = fem.ElementBatch(zone, fem.quadrature_rule(2))
    u_qp = batch.values_at_qp(sol.u)                     # (nt, nq, 2)
    norm_qp = np.hypot(u_qp[..., 0], u_qp[..., 1])
    u_avg_zone = float((batch.wdet * norm_qp).sum() / total_area)

    u_avg_g1 = _boundary_norm_average(zone, sol.u, BoundaryLabel.ZONE_GAMMA1)
    u_avg_g2 = _boundary_norm_average(zone, sol.u, BoundaryLabel.ZONE_GAMMA2)

    g1 = zone.edges_with_label(BoundaryLabel.ZONE_GAMMA1)
    sig = np.asarray(gamma1_fluid_stress, dtype=float)
    want = (g1.shape[0], 3, 2, 2)
    if sig.shape != want:
        raise ValueError(f"gamma1_fluid_stress must have shape {want}, "
                         f"got {sig.shape}")
    eb = fem.EdgeBatch(zone, g1)
    sig_qp = eb.nodal_values_at_qp(sig)                  # (m, nq, 2, 2)
    t_qp = np.einsum("mqij,mj->mqi", sig_qp, eb.normals)  # sigma . n_c
    length = eb.total_length()
    t_avg = (eb.wlen[..., None] * t_qp).sum(axis=(0, 1)) / length
    shear_qp = max_shear(sig_qp)
    shear_avg = float((eb.wlen * shear_qp).sum() / length)

    grad = fem.recover_gradient(sol.u)                   # (nv, 2, 2)
    eps = 0.5 * (grad + np.transpose(grad, (0, 2, 1)))
    sigma_c = hooke_stress(eps, sol.lame)
    shear_field = fem.Field(fem.FeSpace(zone, 1, 1), max_shear(sigma_c))

    return ZoneDiagnostics(
        u_avg_zone=u_avg_zone,
        u_avg_gamma1=u_avg_g1,
        u_avg_gamma2=u_avg_g2,
        traction_avg=t_avg,
        traction_magnitude=float(np.hypot(t_avg[0], t_avg[1])),
        max_shear_avg_gamma1=shear_avg,
        max_shear_zone=shear_field,
    )
