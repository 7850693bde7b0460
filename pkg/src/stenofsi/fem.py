"""Finite-element core: Taylor-Hood spaces, quadrature, assembly, solve.

Scalar/vector Lagrange spaces of degree 1 and 2 on triangle meshes,
reference-element quadrature, vectorized COO-triplet assembly, direct
sparse solves, nodal gradient recovery and labeled-edge integration
utilities.  Vector fields use component-major dof layout: dof index =
component * n_scalar + scalar_dof.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._kernels import MeshLocator


class FemError(Exception):
    """Base class for discretization/solver failures."""


class SingularMatrixError(FemError):
    """The system matrix is singular."""


class SolverError(FemError):
    """A linear solve finished but failed its residual check."""


class OutsideDomainError(FemError):
    """A query point lies outside the mesh."""

    def __init__(self, point):
        self.point = np.asarray(point, dtype=float)
        super().__init__(f"point ({self.point[0]:.6g}, {self.point[1]:.6g}) "
                         "lies outside the mesh")


# ---------------------------------------------------------------------------
# quadrature on the reference triangle (0,0)-(1,0)-(0,1)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quadrature:
    """A quadrature rule on the reference triangle (weights sum to 1/2)."""

    points: np.ndarray   # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,)
    order: int


def quadrature_rule(order: int) -> Quadrature:
    """Return the degree-2 (3-point) or degree-5 (7-point) triangle rule."""
    if order == 2:
        pts = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        w = np.full(3, 1 / 6)
    elif order == 5:
        s15 = np.sqrt(15.0)
        a = (6.0 + s15) / 21.0
        b = (6.0 - s15) / 21.0
        pts = np.array([
            [1 / 3, 1 / 3],
            [a, a], [1 - 2 * a, a], [a, 1 - 2 * a],
            [b, b], [1 - 2 * b, b], [b, 1 - 2 * b],
        ])
        wa = (155.0 + s15) / 2400.0
        wb = (155.0 - s15) / 2400.0
        w = np.array([9 / 80, wa, wa, wa, wb, wb, wb])
    else:
        raise ValueError(f"unsupported quadrature order {order} (supported: 2, 5)")
    return Quadrature(points=pts, weights=w, order=order)


# Gauss-Legendre on [0, 1] for edge integrals (degree 5).
_EDGE_S = 0.5 + 0.5 * np.array([-np.sqrt(3 / 5), 0.0, np.sqrt(3 / 5)])
_EDGE_W = 0.5 * np.array([5 / 9, 8 / 9, 5 / 9])


# ---------------------------------------------------------------------------
# reference shape functions
# ---------------------------------------------------------------------------


def p1_values(pts) -> np.ndarray:
    """(n, 3) barycentric basis values at reference points."""
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack([1.0 - x - y, x, y])


P1_GRADS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def p2_values(pts) -> np.ndarray:
    """(n, 6) quadratic basis values; dofs = 3 vertices then 3 edge midpoints.

    Edge dof k sits on the edge opposite vertex k (matching the mesh's
    tri_to_edge ordering).
    """
    L = p1_values(pts)
    l1, l2, l3 = L[:, 0], L[:, 1], L[:, 2]
    return np.column_stack([
        l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
        4 * l2 * l3, 4 * l3 * l1, 4 * l1 * l2,
    ])


def p2_grads(pts) -> np.ndarray:
    """(n, 6, 2) reference gradients of the quadratic basis."""
    pts = np.atleast_2d(pts)
    L = p1_values(pts)
    g = np.empty((pts.shape[0], 6, 2))
    for k in range(3):
        g[:, k] = (4 * L[:, k, None] - 1) * P1_GRADS[k]
    pairs = [(1, 2), (2, 0), (0, 1)]
    for k, (i, j) in enumerate(pairs):
        g[:, 3 + k] = 4 * (L[:, i, None] * P1_GRADS[j] + L[:, j, None] * P1_GRADS[i])
    return g


def edge_trace_values(s) -> np.ndarray:
    """(n, 3) quadratic trace basis [end0, end1, midpoint] at parameters s."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return np.column_stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)])


def edge_trace_derivs(s) -> np.ndarray:
    """(n, 3) d/ds of the quadratic trace basis."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return np.column_stack([4 * s - 3, 4 * s - 1, 4 - 8 * s])


# ---------------------------------------------------------------------------
# spaces and fields
# ---------------------------------------------------------------------------


class FeSpace:
    """Continuous Lagrange space of degree 1 or 2, scalar or 2-vector."""

    def __init__(self, mesh, degree: int, arity: int = 1):
        if degree not in (1, 2):
            raise ValueError(f"unsupported polynomial degree {degree}")
        if arity not in (1, 2):
            raise ValueError(f"unsupported arity {arity}")
        self.mesh = mesh
        self.degree = degree
        self.arity = arity
        if degree == 1:
            self.n_scalar = mesh.n_vertices
        else:
            self.n_scalar = mesh.n_vertices + mesh.edges().shape[0]
        self.n_dof = self.n_scalar * arity
        self.n_basis = 3 if degree == 1 else 6

    def element_dofs(self) -> np.ndarray:
        """(nt, n_basis) scalar dof ids per element."""
        mesh = self.mesh
        if self.degree == 1:
            return mesh.triangles.astype(np.int64)
        return np.hstack([
            mesh.triangles.astype(np.int64),
            mesh.n_vertices + mesh.tri_to_edge().astype(np.int64),
        ])

    def dof_coords(self) -> np.ndarray:
        """(n_scalar, 2) coordinates of the scalar dofs."""
        mesh = self.mesh
        if self.degree == 1:
            return mesh.vertices.copy()
        mids = mesh.vertices[mesh.edges()].mean(axis=1)
        return np.vstack([mesh.vertices, mids])

    def edge_dof_ids(self, edges) -> np.ndarray:
        """(m, 3) scalar dof ids [end0, end1, midpoint] for labeled edges."""
        if self.degree != 2:
            raise ValueError("edge_dof_ids requires a degree-2 space")
        idx = self.mesh.edge_index()
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        out = np.empty((edges.shape[0], 3), dtype=np.int64)
        for i, (a, b) in enumerate(edges):
            key = (int(min(a, b)), int(max(a, b)))
            out[i, 0], out[i, 1] = int(a), int(b)
            out[i, 2] = self.mesh.n_vertices + idx[key]
        return out

    def nodes_on_edges(self, edges) -> np.ndarray:
        """Unique scalar dof ids lying on the given edges."""
        if self.degree == 1:
            return np.unique(np.asarray(edges, dtype=np.int64))
        return np.unique(self.edge_dof_ids(edges))

    def zero_field(self) -> "Field":
        return Field(self, np.zeros(self.n_dof))


class Field:
    """Nodal coefficient vector over an FeSpace."""

    def __init__(self, space: FeSpace, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.size != space.n_dof:
            raise ValueError(f"expected {space.n_dof} dofs, got {values.size}")
        self.space = space
        self.values = values

    def copy(self) -> "Field":
        return Field(self.space, self.values.copy())

    def component(self, i: int) -> np.ndarray:
        n = self.space.n_scalar
        return self.values[i * n:(i + 1) * n]

    def vertex_values(self) -> np.ndarray:
        """Values at mesh vertices: (nv,) scalar or (nv, 2) vector."""
        nv = self.space.mesh.n_vertices
        if self.space.arity == 1:
            return self.values[:nv]
        return np.column_stack([self.component(0)[:nv], self.component(1)[:nv]])

    def _locator(self) -> MeshLocator:
        cache = self.space.mesh._cache
        if "locator" not in cache:
            cache["locator"] = MeshLocator(self.space.mesh)
        return cache["locator"]

    def eval_at_cells(self, tri_ids, bary) -> np.ndarray:
        """Evaluate at known (triangle, barycentric) locations.

        Returns (n,) for scalar fields, (n, 2) for vector fields.
        """
        tri_ids = np.asarray(tri_ids, dtype=np.int64)
        bary = np.atleast_2d(np.asarray(bary, dtype=float))
        basis = (p1_values(bary[:, 1:]) if self.space.degree == 1
                 else p2_values(bary[:, 1:]))
        ed = self.space.element_dofs()[tri_ids]
        if self.space.arity == 1:
            return np.einsum("pb,pb->p", basis, self.values[ed])
        n = self.space.n_scalar
        return np.stack([
            np.einsum("pb,pb->p", basis, self.values[ed]),
            np.einsum("pb,pb->p", basis, self.values[ed + n]),
        ], axis=1)

    def eval_many(self, pts, hints=None):
        """Evaluate at points; returns (values, inside_mask).

        Values at outside points are zero; callers decide how to treat them.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        tri, bary = self._locator().locate(pts, hints=hints)
        inside = tri >= 0
        safe_tri = np.where(inside, tri, 0)
        basis = (p1_values(bary[:, 1:]) if self.space.degree == 1
                 else p2_values(bary[:, 1:]))
        ed = self.space.element_dofs()[safe_tri]
        if self.space.arity == 1:
            vals = np.einsum("pb,pb->p", basis, self.values[ed])
            vals[~inside] = 0.0
        else:
            n = self.space.n_scalar
            vals = np.stack([
                np.einsum("pb,pb->p", basis, self.values[ed]),
                np.einsum("pb,pb->p", basis, self.values[ed + n]),
            ], axis=1)
            vals[~inside] = 0.0
        return vals, inside


def interpolate(field: Field, point):
    """Evaluate a field at one point; raises OutsideDomainError if outside."""
    pts = np.asarray(point, dtype=float).reshape(1, 2)
    vals, inside = field.eval_many(pts)
    if not inside[0]:
        raise OutsideDomainError(point)
    return vals[0] if field.space.arity == 2 else float(vals[0])


# ---------------------------------------------------------------------------
# element batches (geometry + tabulation for one assembly pass)
# ---------------------------------------------------------------------------


class ElementBatch:
    """Per-element geometry factors and basis tabulations for a mesh+rule."""

    def __init__(self, mesh, quad: Quadrature, restrict=None):
        """``restrict``: optional triangle-index subset to assemble over."""
        self.mesh = mesh
        self.quad = quad
        tris = np.arange(mesh.n_triangles) if restrict is None \
            else np.asarray(restrict, dtype=np.int64)
        self.tri_ids = tris
        p = mesh.vertices[mesh.triangles[tris]]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if np.any(det <= 0):
            bad = int(tris[np.argmin(det)])
            raise FemError(f"element {bad} has non-positive Jacobian")
        self.det = det
        # Inverse-transpose Jacobian: maps reference gradients to physical.
        inv_jt = np.empty((tris.size, 2, 2))
        inv_jt[:, 0, 0] = d2[:, 1]
        inv_jt[:, 0, 1] = -d1[:, 1]
        inv_jt[:, 1, 0] = -d2[:, 0]
        inv_jt[:, 1, 1] = d1[:, 0]
        inv_jt /= det[:, None, None]
        self.inv_jt = inv_jt

        self.vals1 = p1_values(quad.points)           # (nq, 3)
        self.vals2 = p2_values(quad.points)           # (nq, 6)
        ref_g2 = p2_grads(quad.points)                # (nq, 6, 2)
        self.grads2 = np.einsum("tij,qbj->tqbi", inv_jt, ref_g2)
        self.grads1 = np.einsum("tij,bj->tbi", inv_jt, P1_GRADS)
        self.wdet = quad.weights[None, :] * det[:, None]   # (nt, nq)
        self.qpoints = np.einsum("qb,tbi->tqi", self.vals1, p)

    def values_at_qp(self, field: Field) -> np.ndarray:
        """Field values at quadrature points: (nt, nq) or (nt, nq, 2)."""
        ed = field.space.element_dofs()[self.tri_ids]
        basis = self.vals1 if field.space.degree == 1 else self.vals2
        if field.space.arity == 1:
            return np.einsum("qb,tb->tq", basis, field.values[ed])
        n = field.space.n_scalar
        return np.stack([
            np.einsum("qb,tb->tq", basis, field.values[ed]),
            np.einsum("qb,tb->tq", basis, field.values[ed + n]),
        ], axis=-1)

    def p2_gradients_at_qp(self, field: Field) -> np.ndarray:
        """Gradient of a degree-2 field at qps: (nt,nq,2) or (nt,nq,2,2).

        For vector fields the result is H[i, j] = d(comp i)/d(x_j).
        """
        ed = field.space.element_dofs()[self.tri_ids]
        if field.space.arity == 1:
            return np.einsum("tqbi,tb->tqi", self.grads2, field.values[ed])
        n = field.space.n_scalar
        gx = np.einsum("tqbi,tb->tqi", self.grads2, field.values[ed])
        gy = np.einsum("tqbi,tb->tqi", self.grads2, field.values[ed + n])
        return np.stack([gx, gy], axis=-2)


def assemble_csr(ke: np.ndarray, rows_ed: np.ndarray, cols_ed: np.ndarray,
                 shape) -> sp.csr_matrix:
    """Scatter element matrices (nt, na, nb) into a CSR matrix."""
    nt, na, nb = ke.shape
    rows = np.repeat(rows_ed[:, :, None], nb, axis=2)
    cols = np.repeat(cols_ed[:, None, :], na, axis=1)
    return sp.coo_matrix((ke.ravel(), (rows.ravel(), cols.ravel())),
                         shape=shape).tocsr()


def scatter_vector(fe: np.ndarray, ed: np.ndarray, n: int) -> np.ndarray:
    """Scatter element vectors (nt, na) into a dense vector of length n."""
    out = np.zeros(n)
    np.add.at(out, ed.ravel(), fe.ravel())
    return out


def scalar_mass(batch: ElementBatch, space: FeSpace,
                coeff_qp: np.ndarray | None = None) -> sp.csr_matrix:
    """Mass matrix of a scalar space (optionally with a coefficient at qps)."""
    basis = batch.vals1 if space.degree == 1 else batch.vals2
    w = batch.wdet if coeff_qp is None else batch.wdet * coeff_qp
    ke = np.einsum("tq,qa,qb->tab", w, basis, basis)
    ed = space.element_dofs()[batch.tri_ids]
    return assemble_csr(ke, ed, ed, (space.n_scalar, space.n_scalar))


def scalar_stiffness(batch: ElementBatch, space: FeSpace,
                     coeff_qp: np.ndarray | None = None) -> sp.csr_matrix:
    """Stiffness (Laplacian) matrix of a scalar space."""
    grads = batch.grads1 if space.degree == 1 else batch.grads2
    w = batch.wdet if coeff_qp is None else batch.wdet * coeff_qp
    if space.degree == 1:
        ke = np.einsum("tq,tai,tbi->tab", w, grads, grads)
    else:
        ke = np.einsum("tq,tqai,tqbi->tab", w, grads, grads)
    ed = space.element_dofs()[batch.tri_ids]
    return assemble_csr(ke, ed, ed, (space.n_scalar, space.n_scalar))


def strain_strain_blocks(batch: ElementBatch, mu_qp, lam_qp=None):
    """Blocks of 2*mu*eps(u):eps(v) + lam*div(u)*div(v) on the P2 vector space.

    Returns (kxx, kxy, kyx, kyy) as element arrays (nt, 6, 6); the caller
    scatters them into the global matrix.
    """
    gx = batch.grads2[..., 0]
    gy = batch.grads2[..., 1]
    wm = batch.wdet * mu_qp
    kxx = np.einsum("tq,tqa,tqb->tab", 2 * wm, gx, gx) \
        + np.einsum("tq,tqa,tqb->tab", wm, gy, gy)
    kyy = np.einsum("tq,tqa,tqb->tab", 2 * wm, gy, gy) \
        + np.einsum("tq,tqa,tqb->tab", wm, gx, gx)
    kxy = np.einsum("tq,tqa,tqb->tab", wm, gy, gx)
    kyx = np.einsum("tq,tqa,tqb->tab", wm, gx, gy)
    if lam_qp is not None:
        wl = batch.wdet * lam_qp
        kxx += np.einsum("tq,tqa,tqb->tab", wl, gx, gx)
        kyy += np.einsum("tq,tqa,tqb->tab", wl, gy, gy)
        kxy += np.einsum("tq,tqa,tqb->tab", wl, gx, gy)
        kyx += np.einsum("tq,tqa,tqb->tab", wl, gy, gx)
    return kxx, kxy, kyx, kyy


def divergence_blocks(batch: ElementBatch, p_space: FeSpace, v_space: FeSpace):
    """Element arrays (nt, 3, 6) of ∫ q ∂x(psi_b) and ∫ q ∂y(psi_b)."""
    gx = batch.grads2[..., 0]
    gy = batch.grads2[..., 1]
    cx = np.einsum("tq,qc,tqb->tcb", batch.wdet, batch.vals1, gx)
    cy = np.einsum("tq,qc,tqb->tcb", batch.wdet, batch.vals1, gy)
    return cx, cy


# ---------------------------------------------------------------------------
# boundary conditions and solves
# ---------------------------------------------------------------------------


@dataclass
class SparseSystem:
    """An assembled linear system."""

    matrix: sp.csr_matrix
    rhs: np.ndarray


def apply_dirichlet(matrix: sp.csr_matrix, rhs: np.ndarray, dofs, values):
    """Impose matrix rows/cols for Dirichlet dofs; returns (matrix, rhs).

    Known values are moved to the right-hand side so the remaining
    equations stay consistent; constrained rows become identity rows.
    """
    dofs = np.asarray(dofs, dtype=np.int64)
    values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
    n = rhs.size
    x0 = np.zeros(n)
    x0[dofs] = values
    rhs = rhs - matrix @ x0
    keep = np.ones(n)
    keep[dofs] = 0.0
    d_keep = sp.diags(keep)
    matrix = d_keep @ matrix @ d_keep + sp.diags(1.0 - keep)
    rhs = keep * rhs
    rhs[dofs] = values
    return matrix.tocsr(), rhs


def solve_sparse(system: SparseSystem) -> np.ndarray:
    """Direct sparse solve with a residual check.

    Raises SingularMatrixError for singular matrices (naming an empty row
    when one exists) and SolverError if the residual check fails.
    """
    a = system.matrix.tocsr()
    b = system.rhs
    row_counts = np.diff(a.indptr)
    empty = np.nonzero(row_counts == 0)[0]
    if empty.size:
        raise SingularMatrixError(f"matrix has zero row {empty[0]}")
    # A row whose stored entries are all zero is structurally present but
    # still singular; report it like an empty row.
    row_max = np.zeros(a.shape[0])
    if a.nnz:
        np.maximum.at(row_max, np.repeat(np.arange(a.shape[0]), row_counts),
                      np.abs(a.data))
    zero_rows = np.nonzero(row_max == 0)[0]
    if zero_rows.size:
        raise SingularMatrixError(f"matrix has zero row {zero_rows[0]}")
    try:
        lu = spla.splu(a.tocsc())
        x = lu.solve(b)
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("solution contains non-finite entries")
    a_norm = np.abs(a).sum(axis=1).max()
    scale = np.linalg.norm(b) + a_norm * np.linalg.norm(x)
    resid = np.linalg.norm(a @ x - b)
    if resid > 1e-10 * scale + 1e-300:
        raise SolverError(f"direct solve residual {resid:.3e} exceeds "
                          f"1e-10 * {scale:.3e}")
    return x


# ---------------------------------------------------------------------------
# norms and recovery
# ---------------------------------------------------------------------------


def l2_norm(field: Field, restrict=None) -> float:
    """L2 norm of a field (vector fields: root of summed component norms)."""
    batch = ElementBatch(field.space.mesh, quadrature_rule(5), restrict=restrict)
    vals = batch.values_at_qp(field)
    if field.space.arity == 1:
        return float(np.sqrt(np.sum(batch.wdet * vals ** 2)))
    return float(np.sqrt(np.sum(batch.wdet * (vals ** 2).sum(axis=-1))))


def l2_norm_divergence(field: Field, restrict=None) -> float:
    """L2 norm of the divergence of a degree-2 vector field."""
    batch = ElementBatch(field.space.mesh, quadrature_rule(5), restrict=restrict)
    grad = batch.p2_gradients_at_qp(field)
    div = grad[..., 0, 0] + grad[..., 1, 1]
    return float(np.sqrt(np.sum(batch.wdet * div ** 2)))


_VERTEX_REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def recover_gradient(field: Field) -> np.ndarray:
    """Recover the gradient at vertices by area-weighted nodal averaging.

    Each adjacent element's gradient is evaluated at the vertex itself and
    averaged with area weights, which reproduces globally-linear gradients
    exactly (including at boundary vertices). Returns (nv, 2) for scalar
    fields, (nv, 2, 2) with H[i, j] = d(comp i)/d(x_j) for vector fields.
    """
    mesh = field.space.mesh
    batch = ElementBatch(mesh, quadrature_rule(2))
    area = 0.5 * batch.det
    if field.space.degree == 1:
        # Element gradients are constant.
        ed = field.space.element_dofs()
        if field.space.arity == 1:
            g_elem = np.einsum("tbi,tb->ti", batch.grads1, field.values[ed])
            g_vert = np.repeat(g_elem[:, None, :], 3, axis=1)
        else:
            n = field.space.n_scalar
            gx = np.einsum("tbi,tb->ti", batch.grads1, field.values[ed])
            gy = np.einsum("tbi,tb->ti", batch.grads1, field.values[ed + n])
            g_vert = np.repeat(np.stack([gx, gy], axis=-2)[:, None], 3, axis=1)
    else:
        ref_g = p2_grads(_VERTEX_REF)                      # (3, 6, 2)
        grads_v = np.einsum("tij,vbj->tvbi", batch.inv_jt, ref_g)
        ed = field.space.element_dofs()
        if field.space.arity == 1:
            g_vert = np.einsum("tvbi,tb->tvi", grads_v, field.values[ed])
        else:
            n = field.space.n_scalar
            gx = np.einsum("tvbi,tb->tvi", grads_v, field.values[ed])
            gy = np.einsum("tvbi,tb->tvi", grads_v, field.values[ed + n])
            g_vert = np.stack([gx, gy], axis=-2)           # (nt, 3, 2, 2)

    # Area-weighted average of the element gradients evaluated at the
    # vertex itself: reproduces globally-linear gradients exactly, also at
    # boundary vertices (a lumped L2 projection has an O(h) bias there).
    shape = g_vert.shape[2:]
    nv = mesh.n_vertices
    num = np.zeros((nv,) + shape)
    den = np.zeros(nv)
    tris = mesh.triangles
    w = area.reshape((-1,) + (1,) * len(shape))
    for c in range(3):
        np.add.at(num, tris[:, c], w * g_vert[:, c])
        np.add.at(den, tris[:, c], area)
    return num / den.reshape((-1,) + (1,) * len(shape))


# ---------------------------------------------------------------------------
# labeled-edge integration
# ---------------------------------------------------------------------------


class EdgeBatch:
    """Quadrature data for integrals over a set of mesh edges.

    Orientation: ``normals`` point away from the adjacent triangle lying in
    ``inside_tag`` (or away from the unique adjacent triangle when the tag
    is None), i.e. outward from the chosen side.
    """

    def __init__(self, mesh, edges, inside_tag=None):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.mesh = mesh
        self.edges = edges
        idx = mesh.edge_index()
        t2e = mesh.tri_to_edge()
        n_edges = mesh.edges().shape[0]
        # Map edge -> adjacent triangles.
        owner: list[list[int]] = [[] for _ in range(n_edges)]
        for t in range(mesh.n_triangles):
            for k in range(3):
                owner[t2e[t, k]].append(t)

        m = edges.shape[0]
        self.inside_tri = np.empty(m, dtype=np.int64)
        for i, (a, b) in enumerate(edges):
            key = (int(min(a, b)), int(max(a, b)))
            eid = idx[key]
            cands = owner[eid]
            if inside_tag is not None:
                cands = [t for t in cands if mesh.tri_tags[t] == int(inside_tag)]
            if not cands:
                raise FemError(f"edge {key} has no adjacent triangle on the "
                               "requested side")
            self.inside_tri[i] = cands[0]

        pa = mesh.vertices[edges[:, 0]]
        pb = mesh.vertices[edges[:, 1]]
        tang = pb - pa
        self.lengths = np.linalg.norm(tang, axis=1)
        self.tangents = tang / self.lengths[:, None]
        normals = np.column_stack([self.tangents[:, 1], -self.tangents[:, 0]])
        centroids = mesh.vertices[mesh.triangles[self.inside_tri]].mean(axis=1)
        mid = 0.5 * (pa + pb)
        flip = np.einsum("ij,ij->i", normals, centroids - mid) > 0
        normals[flip] *= -1
        self.normals = normals
        # Quadrature along each edge.
        self.s = _EDGE_S
        self.w = _EDGE_W
        self.trace_vals = edge_trace_values(_EDGE_S)     # (nq, 3)
        self.trace_derivs = edge_trace_derivs(_EDGE_S)   # (nq, 3)
        self.qpoints = pa[:, None, :] + _EDGE_S[None, :, None] * tang[:, None, :]
        self.wlen = self.w[None, :] * self.lengths[:, None]

    def total_length(self) -> float:
        return float(self.lengths.sum())

    def nodal_values_at_qp(self, nodal: np.ndarray) -> np.ndarray:
        """Interpolate per-edge nodal data (m, 3, ...) along each edge."""
        return np.einsum("qb,mb...->mq...", self.trace_vals, nodal)

    def integrate(self, values_qp: np.ndarray) -> float | np.ndarray:
        """Integrate per-qp data (m, nq, ...) over all edges."""
        return np.einsum("mq,mq...->...", self.wlen, values_qp)
