"""Quasi-static incompressible hyperelastic wall: damped Newton solve.

Unknowns are the deformation map (degree 2, on the reference wall mesh) and
the hydrostatic pressure enforcing local incompressibility (degree 1, with a
small penalty so the system stays invertible). The interface carries a
follower load: a prescribed Cauchy-stress tensor acting on the deformed
surface, pulled back to the reference edge through the cofactor identity
cof(F) n da = o * rot(dphi/ds) ds, where rot(u) = (u_y, -u_x) and o = +-1
encodes the edge orientation.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp

from . import fem
from .geometry import BoundaryLabel
from .materials import HyperelasticParams, cofactor, first_piola

__all__ = [
    "InterfaceTraction", "SolidState", "NewtonParams", "NewtonReport",
    "NewtonError", "identity_map", "reference_state", "newton_solve",
    "incompressibility_residual",
]


class NewtonError(Exception):
    """Newton iteration failed; carries the iteration history."""

    def __init__(self, message: str, report: "NewtonReport"):
        super().__init__(message)
        self.report = report


@dataclass
class InterfaceTraction:
    """Cauchy-stress data on interface edges of the reference wall mesh.

    ``edges``: (m, 2) vertex pairs; ``sigma``: (m, 3, 2, 2) nodal stress
    tensors in trace order [end0, end1, midpoint].
    """

    edges: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.sigma.shape != (self.edges.shape[0], 3, 2, 2):
            raise ValueError(
                f"sigma must have shape (m, 3, 2, 2) matching {self.edges.shape[0]} "
                f"edges (got {self.sigma.shape})")

    @classmethod
    def uniform_pressure(cls, edges, pressure: float) -> "InterfaceTraction":
        """Data for a uniform fluid pressure: sigma = -pressure * Id."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        sig = np.zeros((edges.shape[0], 3, 2, 2))
        sig[..., 0, 0] = -pressure
        sig[..., 1, 1] = -pressure
        return cls(edges, sig)


def identity_map(vspace: fem.FeSpace) -> fem.Field:
    """The deformation field phi(x) = x."""
    coords = vspace.dof_coords()
    return fem.Field(vspace, np.concatenate([coords[:, 0], coords[:, 1]]))


@dataclass
class SolidState:
    """Deformation map and hydrostatic pressure on the reference wall mesh."""

    phi: fem.Field     # vector, degree 2
    p_hs: fem.Field    # scalar, degree 1
    mesh: object

    def __post_init__(self):
        if self.phi.space.mesh is not self.mesh or \
                self.p_hs.space.mesh is not self.mesh:
            raise ValueError("solid fields must live on the reference mesh")
        if not (np.all(np.isfinite(self.phi.values))
                and np.all(np.isfinite(self.p_hs.values))):
            raise ValueError("solid state has non-finite values")

    @property
    def xi_s(self) -> fem.Field:
        """Displacement field phi - identity."""
        ident = identity_map(self.phi.space)
        return fem.Field(self.phi.space, self.phi.values - ident.values)


def reference_state(mesh, mat: HyperelasticParams) -> SolidState:
    """Undeformed wall with the hydrostatic pressure of the rest state."""
    vspace = fem.FeSpace(mesh, degree=2, arity=2)
    qspace = fem.FeSpace(mesh, degree=1, arity=1)
    p = fem.Field(qspace, np.full(qspace.n_dof, mat.rest_pressure))
    return SolidState(phi=identity_map(vspace), p_hs=p, mesh=mesh)


@dataclass(frozen=True)
class NewtonParams:
    """Newton loop controls."""

    tol: float = 1.0e-8       # on the applied update norm ||delta phi||_2
    max_iter: int = 20
    epsilon: float = 1.0e-6   # dimensionless pressure penalty
    max_halvings: int = 8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive (got {self.tol})")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1 (got {self.max_iter})")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1) "
                             f"(got {self.epsilon})")


@dataclass
class NewtonReport:
    """Per-iteration history of a Newton solve."""

    converged: bool = False
    iterations: int = 0
    step_norms: list = dc_field(default_factory=list)
    residual_norms: list = dc_field(default_factory=list)
    halvings: int = 0


class _EdgeWork:
    """Precomputed interface-edge data for the follower-load terms."""

    def __init__(self, mesh, vspace: fem.FeSpace, traction: InterfaceTraction):
        eb = fem.EdgeBatch(mesh, traction.edges)
        self.ids = vspace.edge_dof_ids(traction.edges)       # (m, 3)
        # o = n . rot(t): +1 when the outward normal is the tangent rotated
        # by -90 degrees, -1 otherwise.
        self.orient = np.sign(eb.normals[:, 0] * eb.tangents[:, 1]
                              - eb.normals[:, 1] * eb.tangents[:, 0])
        self.w = eb.w                                        # (nq,) on [0, 1]
        self.trace_vals = eb.trace_vals                      # (nq, 3)
        self.trace_derivs = eb.trace_derivs                  # (nq, 3)
        # Stress tensors at edge quadrature points: (m, nq, 2, 2).
        self.sigma_qp = np.einsum("qb,mbij->mqij", eb.trace_vals,
                                  traction.sigma)

    def dphi_ds(self, phix: np.ndarray, phiy: np.ndarray) -> np.ndarray:
        """d(phi)/ds at edge quadrature points: (m, nq, 2)."""
        px = np.einsum("qb,mb->mq", self.trace_derivs, phix[self.ids])
        py = np.einsum("qb,mb->mq", self.trace_derivs, phiy[self.ids])
        return np.stack([px, py], axis=-1)


def _def_grad(batch: fem.ElementBatch, ed2, phix, phiy) -> np.ndarray:
    """Deformation gradient F[i, j] = d(phi_i)/d(x_j) at quadrature points."""
    fx = np.einsum("tqbl,tb->tql", batch.grads2, phix[ed2])
    fy = np.einsum("tqbl,tb->tql", batch.grads2, phiy[ed2])
    return np.stack([fx, fy], axis=-2)


def _dets(f: np.ndarray) -> np.ndarray:
    return f[..., 0, 0] * f[..., 1, 1] - f[..., 0, 1] * f[..., 1, 0]


def _residual(batch, vspace, qspace, ed2, ed1, phi, p, mat, eps_eff,
              ework: _EdgeWork | None) -> np.ndarray:
    nsc = vspace.n_scalar
    npd = qspace.n_scalar
    phix, phiy = phi[:nsc], phi[nsc:]
    f = _def_grad(batch, ed2, phix, phiy)
    j = _dets(f)
    p_qp = np.einsum("qc,tc->tq", batch.vals1, p[ed1])
    stress = first_piola(f, mat) + p_qp[..., None, None] * cofactor(f)

    r = np.zeros(2 * nsc + npd)
    for i in range(2):
        fe = np.einsum("tq,tql,tqal->ta", batch.wdet, stress[..., i, :],
                       batch.grads2)
        r[i * nsc:(i + 1) * nsc] += fem.scatter_vector(fe, ed2, nsc)
    # The pressure penalty is centred on the homeostatic rest pressure so
    # that (identity, rest_pressure) solves the discrete problem exactly
    # under zero traction; an uncentred penalty would leave a residual of
    # size eps_eff * rest_pressure that slowly pushes an unloaded wall off
    # its reference configuration.
    fp = np.einsum("tq,qc->tc",
                   batch.wdet * (j - 1.0
                                 + eps_eff * (p_qp - mat.rest_pressure)),
                   batch.vals1)
    r[2 * nsc:] += fem.scatter_vector(fp, ed1, npd)

    if ework is not None:
        dphi = ework.dphi_ds(phix, phiy)                      # (m, nq, 2)
        rot = np.stack([dphi[..., 1], -dphi[..., 0]], axis=-1)
        load = np.einsum("mqij,mqj->mqi", ework.sigma_qp, rot)
        load *= ework.orient[:, None, None]
        fe = -np.einsum("q,qa,mqi->mai", ework.w, ework.trace_vals, load)
        for i in range(2):
            np.add.at(r, ework.ids + i * nsc, fe[..., i])
    return r


def _tangent(batch, vspace, qspace, ed2, ed1, phi, p, mat, eps_eff,
             ework: _EdgeWork | None) -> sp.csr_matrix:
    nsc = vspace.n_scalar
    npd = qspace.n_scalar
    phix, phiy = phi[:nsc], phi[nsc:]
    f = _def_grad(batch, ed2, phix, phiy)
    j = _dets(f)
    cof = cofactor(f)
    p_qp = np.einsum("qc,tc->tq", batch.vals1, p[ed1])

    w = batch.wdet
    gx = batch.grads2[..., 0]
    gy = batch.grads2[..., 1]
    # (cof F . grad Nb)_i at quadrature points: (t, q, b, i)
    cg = np.einsum("tqil,tqbl->tqbi", cof, batch.grads2)

    c2 = 4.0 * mat.c2 * (3.0 * j ** 2 - 2.0)
    c3p = 4.0 * mat.c2 * (j ** 3 - 2.0 * j) + p_qp

    lap = 2.0 * mat.c1 * np.einsum("tq,tqal,tqbl->tab", w, batch.grads2,
                                   batch.grads2)
    kxx = lap + np.einsum("tq,tqa,tqb->tab", w * c2, cg[..., 0], cg[..., 0])
    kyy = lap + np.einsum("tq,tqa,tqb->tab", w * c2, cg[..., 1], cg[..., 1])
    kxy = np.einsum("tq,tqa,tqb->tab", w * c2, cg[..., 0], cg[..., 1])
    kyx = np.einsum("tq,tqa,tqb->tab", w * c2, cg[..., 1], cg[..., 0])
    # Derivative of the cofactor (the linearized geometric term).
    perm = np.einsum("tq,tqa,tqb->tab", w * c3p, gx, gy) \
        - np.einsum("tq,tqa,tqb->tab", w * c3p, gy, gx)
    kxy += perm
    kyx -= perm

    kup = [np.einsum("tq,tqa,qc->tac", w, cg[..., i], batch.vals1)
           for i in range(2)]
    kpp = (eps_eff * np.einsum("tq,qc,qd->tcd", w, batch.vals1, batch.vals1))

    shape_vv = (nsc, nsc)
    axx = fem.assemble_csr(kxx, ed2, ed2, shape_vv)
    axy = fem.assemble_csr(kxy, ed2, ed2, shape_vv)
    ayx = fem.assemble_csr(kyx, ed2, ed2, shape_vv)
    ayy = fem.assemble_csr(kyy, ed2, ed2, shape_vv)

    if ework is not None:
        ow = ework.orient[:, None] * ework.w[None, :]        # (m, nq)
        def edge_block(sig_comp, sign):
            ke = sign * np.einsum("mq,qa,qb->mab", ow * sig_comp,
                                  ework.trace_vals, ework.trace_derivs)
            return fem.assemble_csr(ke, ework.ids, ework.ids, shape_vv)
        # K[(a,i),(b,0)] += o * int Na Nb' sigma[i,1]; (b,1): -= ... sigma[i,0]
        axx = axx + edge_block(ework.sigma_qp[..., 0, 1], +1.0)
        ayx = ayx + edge_block(ework.sigma_qp[..., 1, 1], +1.0)
        axy = axy + edge_block(ework.sigma_qp[..., 0, 0], -1.0)
        ayy = ayy + edge_block(ework.sigma_qp[..., 1, 0], -1.0)

    shape_vp = (nsc, npd)
    axp = fem.assemble_csr(kup[0], ed2, ed1, shape_vp)
    ayp = fem.assemble_csr(kup[1], ed2, ed1, shape_vp)
    apx = fem.assemble_csr(np.transpose(kup[0], (0, 2, 1)), ed1, ed2,
                           (npd, nsc))
    apy = fem.assemble_csr(np.transpose(kup[1], (0, 2, 1)), ed1, ed2,
                           (npd, nsc))
    app = fem.assemble_csr(kpp, ed1, ed1, (npd, npd))
    return sp.bmat([[axx, axy, axp],
                    [ayx, ayy, ayp],
                    [apx, apy, app]], format="csr")


def newton_solve(state0: SolidState, traction: InterfaceTraction | None,
                 mat: HyperelasticParams,
                 params: NewtonParams = NewtonParams(),
                 fixed_label=BoundaryLabel.FIXED_WALL):
    """Solve the quasi-static wall problem; returns (SolidState, NewtonReport).

    Displacement is pinned to zero on the ``fixed_label`` edges. The damped
    Newton loop halves the update until the deformation stays orientation-
    preserving, and stops when the applied update norm falls below tol.
    Raises NewtonError (with the history attached) on non-convergence or
    when damping cannot restore a positive Jacobian.
    """
    mesh = state0.mesh
    vspace = state0.phi.space
    qspace = state0.p_hs.space
    nsc = vspace.n_scalar
    batch = fem.ElementBatch(mesh, fem.quadrature_rule(5))
    ed2 = vspace.element_dofs()[batch.tri_ids]
    ed1 = qspace.element_dofs()[batch.tri_ids]
    eps_eff = params.epsilon / (2.0 * mat.c1)

    phi = state0.phi.values.copy()
    p = state0.p_hs.values.copy()
    if np.any(_dets(_def_grad(batch, ed2, phi[:nsc], phi[nsc:])) <= 0):
        raise ValueError("initial deformation is not orientation-preserving")

    edges = mesh.edges_with_label(fixed_label)
    if edges.shape[0]:
        fixed_nodes = vspace.nodes_on_edges(edges)
        dir_dofs = np.concatenate([fixed_nodes, fixed_nodes + nsc])
    else:
        dir_dofs = np.empty(0, dtype=np.int64)
    ework = _EdgeWork(mesh, vspace, traction) if traction is not None else None

    report = NewtonReport()
    for _ in range(params.max_iter):
        r = _residual(batch, vspace, qspace, ed2, ed1, phi, p, mat,
                      eps_eff, ework)
        k = _tangent(batch, vspace, qspace, ed2, ed1, phi, p, mat,
                     eps_eff, ework)
        ksys, rhs = fem.apply_dirichlet(k, -r, dir_dofs,
                                        np.zeros(dir_dofs.size))
        delta = fem.solve_sparse(fem.SparseSystem(ksys, rhs))
        dphi, dp = delta[:2 * nsc], delta[2 * nsc:]

        alpha = 1.0
        for _h in range(params.max_halvings + 1):
            trial = phi + alpha * dphi
            if np.all(_dets(_def_grad(batch, ed2, trial[:nsc],
                                      trial[nsc:])) > 0):
                break
            alpha *= 0.5
            report.halvings += 1
        else:
            report.iterations += 1
            raise NewtonError(
                "damping cannot restore a positive Jacobian "
                f"after {params.max_halvings} halvings", report)

        phi = phi + alpha * dphi
        p = p + alpha * dp
        step = float(np.linalg.norm(alpha * dphi))
        report.iterations += 1
        report.step_norms.append(step)
        report.residual_norms.append(float(np.linalg.norm(r)))
        if step < params.tol:
            report.converged = True
            break

    if not report.converged:
        raise NewtonError(
            f"no convergence after {report.iterations} iterations "
            f"(last step {report.step_norms[-1]:.3e})", report)
    state = SolidState(phi=fem.Field(vspace, phi),
                       p_hs=fem.Field(qspace, p), mesh=mesh)
    return state, report


def incompressibility_residual(state: SolidState) -> float:
    """L2 norm of det(grad phi) - 1 over the reference wall."""
    batch = fem.ElementBatch(state.mesh, fem.quadrature_rule(5))
    ed2 = state.phi.space.element_dofs()[batch.tri_ids]
    nsc = state.phi.space.n_scalar
    f = _def_grad(batch, ed2, state.phi.values[:nsc], state.phi.values[nsc:])
    return float(np.sqrt(np.sum(batch.wdet * (_dets(f) - 1.0) ** 2)))
