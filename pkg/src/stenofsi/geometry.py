"""Channel-with-stenosis geometry: mesh construction, labeling, motion, submeshes.

The computational domain is a 2D channel (the lumen) bounded by two
deformable wall strips of constant thickness.  A smooth cosine bump on the
lower wall narrows the lumen.  A single conforming triangulation covers
lumen and walls; triangles carry a subdomain tag and boundary/interface
edges carry labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np


class Point2(NamedTuple):
    """A point in the plane."""

    x: float
    y: float


class BoundaryLabel(IntEnum):
    """Labels for boundary and interface edges."""

    INLET = 1
    OUTLET = 2
    INTERFACE = 3
    FIXED_WALL = 4
    OUTER_WALL = 5
    ZONE_GAMMA1 = 6
    ZONE_GAMMA2 = 7


class Subdomain(IntEnum):
    """Subdomain tags for triangles."""

    LUMEN = 1
    WALL = 2


class MeshError(Exception):
    """Base class for mesh construction/manipulation failures."""


class InvertedElementError(MeshError):
    """A triangle acquired non-positive signed area."""

    def __init__(self, element: int, area: float):
        self.element = int(element)
        self.area = float(area)
        super().__init__(f"element {element} inverted (signed area {area:.3e})")


@dataclass(frozen=True)
class StenosisGeometry:
    """Parameters of the stenosed channel.

    Lengths in cm.  The lumen occupies ``b(x) <= y <= lumen_height`` where
    ``b`` is the bump profile; each wall is a strip of constant thickness
    ``wall_thickness`` following its interface curve.

    Attributes
    ----------
    length : float
        Channel length L.
    lumen_height : float
        Unobstructed lumen height H.
    wall_thickness : float
        Thickness of each wall strip.
    occlusion : float
        Bump height as a fraction of H, in (0, 1).
    bump_center : float or None
        x-coordinate of the bump apex; ``None`` means L/2.
    bump_half_width : float
        Half-width of the bump support.
    mesh_size : float
        Target edge length h for the triangulation.
    """

    length: float = 6.0
    lumen_height: float = 1.0
    wall_thickness: float = 0.1
    occlusion: float = 0.4
    bump_center: float | None = None
    bump_half_width: float = 0.75
    mesh_size: float = 0.1

    @property
    def center(self) -> float:
        return self.length / 2.0 if self.bump_center is None else self.bump_center

    def validate(self) -> None:
        checks = [
            (self.length > 0, "length", "must be positive"),
            (self.lumen_height > 0, "lumen_height", "must be positive"),
            (self.wall_thickness > 0, "wall_thickness", "must be positive"),
            (0 < self.occlusion < 1, "occlusion", "must lie in (0, 1)"),
            (self.bump_half_width > 0, "bump_half_width", "must be positive"),
            (self.bump_half_width < self.length / 2,
             "bump_half_width", "must be less than length/2"),
            (self.mesh_size > 0, "mesh_size", "must be positive"),
            (self.mesh_size < self.length, "mesh_size", "must be less than length"),
            (0 < self.center < self.length, "bump_center", "must lie inside (0, length)"),
        ]
        for ok, name, msg in checks:
            if not ok:
                raise ValueError(f"geometry parameter '{name}' {msg} "
                                 f"(got {getattr(self, name)!r})")

    def bump(self, x):
        """Bump profile b(x): C1 cosine hill of height occlusion*H at the center."""
        x = np.asarray(x, dtype=float)
        c, w = self.center, self.bump_half_width
        h = self.occlusion * self.lumen_height
        inside = np.abs(x - c) <= w
        out = np.zeros_like(x)
        out[inside] = 0.5 * h * (1.0 + np.cos(np.pi * (x[inside] - c) / w))
        return out if out.ndim else float(out)

    def bump_slope(self, x):
        """db/dx, used to grade the mesh columns."""
        x = np.asarray(x, dtype=float)
        c, w = self.center, self.bump_half_width
        h = self.occlusion * self.lumen_height
        inside = np.abs(x - c) <= w
        out = np.zeros_like(x)
        out[inside] = -0.5 * h * np.pi / w * np.sin(np.pi * (x[inside] - c) / w)
        return out if out.ndim else float(out)

    def bump_area(self) -> float:
        """Area under the bump profile (exact)."""
        return self.occlusion * self.lumen_height * self.bump_half_width


class Mesh:
    """Conforming triangle mesh with subdomain tags and labeled edges.

    Parameters
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, CCW orientation
    tri_tags : (nt,) int array of Subdomain values
    boundary_edges : (ne, 2) int array
        Distinguished edges: the exterior boundary plus internal interface
        curves.  Vertex pairs are stored sorted.
    boundary_labels : (ne,) int array of BoundaryLabel values
    """

    def __init__(self, vertices, triangles, tri_tags, boundary_edges, boundary_labels):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int32)
        self.tri_tags = np.ascontiguousarray(tri_tags, dtype=np.int32)
        be = np.asarray(boundary_edges, dtype=np.int32).reshape(-1, 2)
        self.boundary_edges = np.sort(be, axis=1).astype(np.int32)
        self.boundary_labels = np.ascontiguousarray(boundary_labels, dtype=np.int32)
        # Provenance of submeshes (filled by extraction helpers).
        self.parent_vertices = None
        self.parent_triangles = None
        self._cache: dict = {}

    # -- basic metrics -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def tri_coords(self) -> np.ndarray:
        """(nt, 3, 2) vertex coordinates per triangle."""
        return self.vertices[self.triangles]

    def signed_areas(self) -> np.ndarray:
        p = self.tri_coords()
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def quality(self) -> np.ndarray:
        """Radius-ratio quality 2*r_in/r_circ per triangle (1 = equilateral)."""
        p = self.tri_coords()
        a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
        b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
        c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
        s = 0.5 * (a + b + c)
        area = np.abs(self.signed_areas())
        r_in = area / s
        r_circ = a * b * c / (4.0 * area)
        return 2.0 * r_in / r_circ

    # -- derived connectivity (cached) ---------------------------------

    def edges(self) -> np.ndarray:
        """(nE, 2) unique undirected edges, vertex pairs sorted."""
        self._build_edges()
        return self._cache["edges"]

    def tri_to_edge(self) -> np.ndarray:
        """(nt, 3) edge index opposite each local vertex."""
        self._build_edges()
        return self._cache["tri_to_edge"]

    def edge_index(self) -> dict:
        """Map sorted vertex pair -> edge index."""
        self._build_edges()
        return self._cache["edge_index"]

    def _build_edges(self) -> None:
        if "edges" in self._cache:
            return
        t = self.triangles
        # Edge k of a triangle is opposite local vertex k.
        raw = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=0)
        raw = np.sort(raw, axis=1)
        edges, inverse = np.unique(raw, axis=0, return_inverse=True)
        self._cache["edges"] = edges.astype(np.int32)
        self._cache["tri_to_edge"] = inverse.reshape(3, -1).T.astype(np.int32)
        self._cache["edge_index"] = {(int(a), int(b)): i
                                     for i, (a, b) in enumerate(edges)}

    def neighbors(self) -> np.ndarray:
        """(nt, 3) neighbor triangle across edge k (-1 where none)."""
        if "neighbors" in self._cache:
            return self._cache["neighbors"]
        t2e = self.tri_to_edge()
        n_edges = self.edges().shape[0]
        tri_ids = np.arange(self.n_triangles, dtype=np.int64)
        # Each edge has at most two incident triangles; record both.
        owner = -np.ones((n_edges, 2), dtype=np.int64)
        flat_edges = t2e.T.ravel()                      # k-major
        flat_tris = np.tile(tri_ids, 3)
        order = np.argsort(flat_edges, kind="stable")
        fe, ft = flat_edges[order], flat_tris[order]
        first_slot = np.ones(fe.size, dtype=bool)
        first_slot[1:] = fe[1:] != fe[:-1]
        owner[fe[first_slot], 0] = ft[first_slot]
        owner[fe[~first_slot], 1] = ft[~first_slot]
        nbr = -np.ones((self.n_triangles, 3), dtype=np.int32)
        for k in range(3):
            o = owner[t2e[:, k]]
            nbr[:, k] = np.where(o[:, 0] == tri_ids, o[:, 1], o[:, 0])
        self._cache["neighbors"] = nbr
        return nbr

    def boundary_label_map(self) -> dict:
        """Map sorted vertex pair -> BoundaryLabel for labeled edges."""
        if "label_map" not in self._cache:
            self._cache["label_map"] = {
                (int(a), int(b)): int(l)
                for (a, b), l in zip(self.boundary_edges, self.boundary_labels)
            }
        return self._cache["label_map"]

    def edges_with_label(self, label: BoundaryLabel) -> np.ndarray:
        """(m, 2) vertex pairs of edges carrying the given label."""
        mask = self.boundary_labels == int(label)
        return self.boundary_edges[mask]

    def subdomain_triangles(self, tag: Subdomain) -> np.ndarray:
        return np.nonzero(self.tri_tags == int(tag))[0]

    # -- mutation ------------------------------------------------------

    def with_vertices(self, new_vertices: np.ndarray) -> "Mesh":
        """Copy of this mesh with replaced vertex coordinates."""
        m = Mesh(new_vertices, self.triangles, self.tri_tags,
                 self.boundary_edges, self.boundary_labels)
        m.parent_vertices = self.parent_vertices
        m.parent_triangles = self.parent_triangles
        # Connectivity caches are coordinate-independent.
        for key in ("edges", "tri_to_edge", "edge_index", "neighbors", "label_map"):
            if key in self._cache:
                m._cache[key] = self._cache[key]
        return m

    def validate(self) -> None:
        """Check structural invariants; raise MeshError on violation."""
        if self.triangles.min(initial=0) < 0 or \
                self.triangles.max(initial=-1) >= self.n_vertices:
            raise MeshError("triangle vertex index out of range")
        areas = self.signed_areas()
        bad = np.nonzero(areas <= 0)[0]
        if bad.size:
            raise InvertedElementError(bad[0], areas[bad[0]])
        # Every labeled edge must be an edge of the triangulation.
        idx = self.edge_index()
        for (a, b), lab in zip(self.boundary_edges, self.boundary_labels):
            if (int(a), int(b)) not in idx:
                raise MeshError(
                    f"labeled edge ({a}, {b}) [{BoundaryLabel(lab).name}] "
                    "is not an edge of the triangulation")
        # Exterior edges (single adjacent triangle) must all carry a label.
        lmap = self.boundary_label_map()
        t2e = self.tri_to_edge()
        counts = np.bincount(t2e.ravel(), minlength=self.edges().shape[0])
        exterior = np.nonzero(counts == 1)[0]
        for e in exterior:
            a, b = self.edges()[e]
            if (int(a), int(b)) not in lmap:
                raise MeshError(f"exterior edge ({a}, {b}) is unlabeled")


# ---------------------------------------------------------------------------
# mesh generation
# ---------------------------------------------------------------------------


def _split_quad(tri_list, q, verts, x_mirror, y_mirror):
    """Split quad q=(bl, br, tr, tl) into two CCW triangles.

    The shorter diagonal wins; ties are broken by a rule that is invariant
    under mirroring about the geometry's vertical and horizontal midlines so
    that symmetric geometries produce symmetric meshes.
    """
    p = verts[list(q)]
    d_main = np.hypot(*(p[2] - p[0]))   # bl-tr
    d_anti = np.hypot(*(p[1] - p[3]))   # br-tl
    if abs(d_main - d_anti) <= 1e-9 * (d_main + d_anti):
        cx, cy = p.mean(axis=0)
        use_main = (cx < x_mirror) ^ (cy < y_mirror)
    else:
        use_main = d_main < d_anti
    bl, br, tr, tl = q
    if use_main:
        tri_list.append((bl, br, tr))
        tri_list.append((bl, tr, tl))
    else:
        tri_list.append((bl, br, tl))
        tri_list.append((br, tr, tl))


def _graded_columns(geom: StenosisGeometry) -> np.ndarray:
    """x-positions of mesh columns, refined where the bump is steep."""
    h, length = geom.mesh_size, geom.length
    xs = [0.0]
    while xs[-1] < length:
        slope = abs(geom.bump_slope(xs[-1]))
        step = h / np.sqrt(1.0 + slope * slope)
        xs.append(xs[-1] + step)
    xs = np.asarray(xs)
    xs *= length / xs[-1]
    # Symmetrize about the bump center: average with the reflected grid so
    # symmetric geometry yields a mirror-symmetric column set.
    if abs(geom.center - length / 2) < 1e-12 * length:
        xs = 0.5 * (xs + (length - xs[::-1]))
    xs[0], xs[-1] = 0.0, length
    return xs


def build_stenosed_artery(geom: StenosisGeometry) -> Mesh:
    """Build the conforming lumen+walls mesh for the given geometry.

    Returns a mesh whose triangles are tagged LUMEN or WALL and whose
    distinguished edges carry INLET / OUTLET / INTERFACE / FIXED_WALL /
    OUTER_WALL labels.  The wall end caps and the outer wall surface away
    from the stenosis window are FIXED_WALL (vessel tethered by surrounding
    tissue); the outer surface over the stenosis window is OUTER_WALL and is
    traction-free, so the diseased segment is the part that deforms.  Raises
    ValueError for degenerate parameters, naming the offending one.
    """
    geom.validate()
    h = geom.mesh_size
    height, thick = geom.lumen_height, geom.wall_thickness

    xs = _graded_columns(geom)
    n_cols = xs.size
    n_lum = max(2, int(round(height / h)))
    n_wall = max(1, int(round(thick / h)))
    rows_per_col = 2 * n_wall + n_lum + 1

    b = geom.bump(xs)
    verts = np.empty((n_cols * rows_per_col, 2), dtype=float)
    for i, (x, bi) in enumerate(zip(xs, b)):
        ys = np.concatenate([
            np.linspace(bi - thick, bi, n_wall + 1),          # lower wall
            np.linspace(bi, height, n_lum + 1)[1:],           # lumen
            np.linspace(height, height + thick, n_wall + 1)[1:],  # upper wall
        ])
        col = slice(i * rows_per_col, (i + 1) * rows_per_col)
        verts[col, 0] = x
        verts[col, 1] = ys

    def vid(i, j):
        return i * rows_per_col + j

    j_ifc_low = n_wall                 # row on the lower interface
    j_ifc_up = n_wall + n_lum          # row on the upper interface
    y_mid = 0.5 * height

    tri_list: list[tuple] = []
    tags: list[int] = []
    for i in range(n_cols - 1):
        for j in range(rows_per_col - 1):
            q = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
            before = len(tri_list)
            _split_quad(tri_list, q, verts, geom.center, y_mid)
            tag = Subdomain.LUMEN if j_ifc_low <= j < j_ifc_up else Subdomain.WALL
            tags.extend([int(tag)] * (len(tri_list) - before))

    triangles = np.asarray(tri_list, dtype=np.int32)
    # Enforce CCW orientation.
    p = verts[triangles]
    area2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = area2 < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    edges: list[tuple] = []
    labels: list[int] = []

    def add_edge(a, bb, label):
        edges.append((a, bb))
        labels.append(int(label))

    last = n_cols - 1
    for j in range(rows_per_col - 1):
        if j_ifc_low <= j < j_ifc_up:
            add_edge(vid(0, j), vid(0, j + 1), BoundaryLabel.INLET)
            add_edge(vid(last, j), vid(last, j + 1), BoundaryLabel.OUTLET)
        else:
            add_edge(vid(0, j), vid(0, j + 1), BoundaryLabel.FIXED_WALL)
            add_edge(vid(last, j), vid(last, j + 1), BoundaryLabel.FIXED_WALL)
    # The outer wall surface is anchored (FIXED_WALL) where the artery is
    # embedded in surrounding tissue, and left free (OUTER_WALL) over the
    # stenosis window |x - center| < half_width so the diseased segment can
    # bulge.  Tethering the straight segments is what keeps the staggered
    # coupling stable: a wall clamped only at its end caps has a 6-cm-span
    # bending mode whose static compliance (~5e-4 cm per unit pressure,
    # clamped-beam scaling) feeds back through the fluid's inertial pressure
    # response at gain ~ compliance * rho_f * L / dt**2 >> 1, which inverts
    # elements within a few steps for any time step of practical size.
    for i in range(n_cols - 1):
        x_mid = 0.5 * (xs[i] + xs[i + 1])
        outer = (BoundaryLabel.OUTER_WALL
                 if abs(x_mid - geom.center) < geom.bump_half_width
                 else BoundaryLabel.FIXED_WALL)
        add_edge(vid(i, 0), vid(i + 1, 0), outer)
        add_edge(vid(i, rows_per_col - 1), vid(i + 1, rows_per_col - 1), outer)
        add_edge(vid(i, j_ifc_low), vid(i + 1, j_ifc_low), BoundaryLabel.INTERFACE)
        add_edge(vid(i, j_ifc_up), vid(i + 1, j_ifc_up), BoundaryLabel.INTERFACE)

    mesh = Mesh(verts, triangles, np.asarray(tags), np.asarray(edges),
                np.asarray(labels))
    areas = mesh.signed_areas()
    if areas.min() <= 0:
        bad = int(np.argmin(areas))
        raise MeshError(
            f"degenerate geometry produced a collapsed triangle (element {bad}); "
            f"check occlusion={geom.occlusion} and mesh_size={geom.mesh_size}")
    mesh.validate()
    return mesh


def rectangle_mesh(nx: int, ny: int, width: float = 1.0, height: float = 1.0,
                   origin: tuple = (0.0, 0.0), tag: Subdomain = Subdomain.LUMEN,
                   labels: tuple = (BoundaryLabel.INLET, BoundaryLabel.OUTLET,
                                    BoundaryLabel.INTERFACE, BoundaryLabel.INTERFACE),
                   ) -> Mesh:
    """Uniform structured mesh of a rectangle; labels = (left, right, bottom, top)."""
    if nx < 1 or ny < 1:
        raise ValueError(f"rectangle_mesh needs nx, ny >= 1 (got {nx}, {ny})")
    x0, y0 = origin
    xs = np.linspace(x0, x0 + width, nx + 1)
    ys = np.linspace(y0, y0 + height, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel()])
    rows = ny + 1

    def vid(i, j):
        return i * rows + j

    tri_list: list[tuple] = []
    for i in range(nx):
        for j in range(ny):
            q = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
            _split_quad(tri_list, q, verts,
                        x0 + width / 2, y0 + height / 2)
    triangles = np.asarray(tri_list, dtype=np.int32)

    edges, elabels = [], []
    left, right, bottom, top = labels
    for j in range(ny):
        edges.append((vid(0, j), vid(0, j + 1))); elabels.append(int(left))
        edges.append((vid(nx, j), vid(nx, j + 1))); elabels.append(int(right))
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0))); elabels.append(int(bottom))
        edges.append((vid(i, ny), vid(i + 1, ny))); elabels.append(int(top))

    tags = np.full(len(tri_list), int(tag))
    return Mesh(verts, triangles, tags, np.asarray(edges), np.asarray(elabels))


# ---------------------------------------------------------------------------
# motion and extraction
# ---------------------------------------------------------------------------


def move_mesh(mesh: Mesh, displacement) -> Mesh:
    """Translate vertex positions by the vertex values of a displacement field.

    ``displacement`` is a vector Field on this mesh (degree 1 or 2); only
    its vertex values move the mesh (edges remain straight).  Raises
    InvertedElementError if any triangle inverts.
    """
    vals = displacement.vertex_values()
    if vals.shape != (mesh.n_vertices, 2):
        raise MeshError("displacement field does not match mesh vertices")
    moved = mesh.with_vertices(mesh.vertices + vals)
    areas = moved.signed_areas()
    bad = np.nonzero(areas <= 0)[0]
    if bad.size:
        raise InvertedElementError(bad[0], areas[bad[0]])
    return moved


def _connected(mesh: Mesh, tris: np.ndarray) -> bool:
    """True if the triangle set is edge-connected."""
    sel = set(int(t) for t in tris)
    nbr = mesh.neighbors()
    seen = {int(tris[0])}
    stack = [int(tris[0])]
    while stack:
        t = stack.pop()
        for k in range(3):
            n = int(nbr[t, k])
            if n in sel and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(sel)


def extract_submesh(mesh: Mesh, tris, require_connected: bool = True) -> Mesh:
    """Extract the submesh of the given triangle set.

    Boundary edges of the result are relabeled: edges lying on the parent
    INTERFACE keep that association as ZONE_GAMMA2; every other boundary
    edge becomes ZONE_GAMMA1.  The returned mesh records its provenance in
    ``parent_vertices`` / ``parent_triangles``.

    Raises ValueError for an empty triangle set, and for an edge-disconnected
    one unless ``require_connected`` is False (subdomains such as a two-sided
    wall are legitimately disconnected).
    """
    tris = np.asarray(tris, dtype=np.int64)
    if tris.size == 0:
        raise ValueError("cannot extract a submesh from an empty triangle set")
    if require_connected and not _connected(mesh, tris):
        raise ValueError("cannot extract a submesh from a disconnected triangle set")

    sub_tris_parent = mesh.triangles[tris]
    used = np.unique(sub_tris_parent)
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    remap[used] = np.arange(used.size)
    new_tris = remap[sub_tris_parent]

    # Boundary edges: those with exactly one adjacent triangle inside the set.
    raw = np.concatenate([new_tris[:, [1, 2]], new_tris[:, [2, 0]],
                          new_tris[:, [0, 1]]], axis=0)
    raw = np.sort(raw, axis=1)
    uniq, counts = np.unique(raw, axis=0, return_counts=True)
    bnd = uniq[counts == 1]

    interface = {(int(a), int(b))
                 for a, b in mesh.edges_with_label(BoundaryLabel.INTERFACE)}
    labels = []
    for a, b in bnd:
        pa, pb = int(used[a]), int(used[b])
        key = (pa, pb) if pa < pb else (pb, pa)
        labels.append(int(BoundaryLabel.ZONE_GAMMA2 if key in interface
                          else BoundaryLabel.ZONE_GAMMA1))

    sub = Mesh(mesh.vertices[used], new_tris, mesh.tri_tags[tris], bnd,
               np.asarray(labels, dtype=np.int32))
    sub.parent_vertices = used
    sub.parent_triangles = tris
    return sub


def subdomain_mesh(mesh: Mesh, tag: Subdomain) -> Mesh:
    """Extract one subdomain, preserving the parent's edge labels.

    Interface edges stay INTERFACE; exterior edges keep their labels.
    """
    tris = mesh.subdomain_triangles(tag)
    if tris.size == 0:
        raise ValueError(f"mesh has no triangles tagged {tag.name}")
    sub = extract_submesh(mesh, tris, require_connected=False)
    lmap = mesh.boundary_label_map()
    labels = []
    for a, b in sub.boundary_edges:
        pa, pb = int(sub.parent_vertices[a]), int(sub.parent_vertices[b])
        key = (pa, pb) if pa < pb else (pb, pa)
        labels.append(lmap.get(key, int(BoundaryLabel.ZONE_GAMMA1)))
    sub.boundary_labels = np.asarray(labels, dtype=np.int32)
    sub._cache.pop("label_map", None)
    return sub
