"""Mesh construction, labeling, motion, and submesh extraction."""

import numpy as np
import pytest
from scipy.integrate import quad

from stenofsi import fem
from stenofsi.geometry import (BoundaryLabel, InvertedElementError, Mesh,
                               MeshError, StenosisGeometry, Subdomain,
                               build_stenosed_artery, extract_submesh,
                               move_mesh, rectangle_mesh, subdomain_mesh)

G = StenosisGeometry()


# ---------------------------------------------------------------------------
# geometry parameters and bump profile
# ---------------------------------------------------------------------------


def test_geometry_validation_errors():
    for bad in (dict(occlusion=0.0), dict(occlusion=1.0), dict(length=-1.0),
                dict(bump_half_width=4.0), dict(mesh_size=0.0),
                dict(bump_center=7.0), dict(wall_thickness=0.0)):
        with pytest.raises(ValueError, match="geometry parameter"):
            StenosisGeometry(**bad).validate()


def test_bump_profile_values():
    assert G.bump(G.center) == G.occlusion * G.lumen_height
    assert G.bump(G.center + G.bump_half_width) == 0.0
    assert G.bump(G.center - G.bump_half_width) == 0.0
    assert G.bump(0.0) == 0.0 and G.bump(G.length) == 0.0
    # C1 at the support edges: slope vanishes there and at the apex
    for x in (G.center, G.center - G.bump_half_width,
              G.center + G.bump_half_width):
        assert abs(G.bump_slope(x)) < 1e-12


def test_bump_area_against_quadrature():
    est, err = quad(G.bump, G.center - G.bump_half_width,
                    G.center + G.bump_half_width)
    assert abs(G.bump_area() - est) <= max(1e-12, 10 * err)


def test_bump_slope_matches_fd():
    xs = np.linspace(G.center - G.bump_half_width + 0.01,
                     G.center + G.bump_half_width - 0.01, 41)
    h = 1e-6
    fd = (G.bump(xs + h) - G.bump(xs - h)) / (2 * h)
    assert np.allclose(G.bump_slope(xs), fd, atol=1e-8)


# ---------------------------------------------------------------------------
# artery mesh
# ---------------------------------------------------------------------------


def test_artery_mesh_is_valid_and_positive(artery_mesh):
    artery_mesh.validate()
    assert np.all(artery_mesh.signed_areas() > 0)
    q = artery_mesh.quality()
    assert np.all(q > 0.2) and np.all(q <= 1.0 + 1e-12)


def test_artery_mesh_area_identities(artery_mesh):
    xs = np.unique(artery_mesh.vertices[:, 0])
    b = G.bump(xs)
    # The mesh interpolates the bump linearly between columns, so the
    # column-trapezoid is the exact area of the triangulation ...
    discrete = np.trapezoid(G.lumen_height + 2 * G.wall_thickness - b, xs)
    total = artery_mesh.signed_areas().sum()
    assert np.isclose(total, discrete, rtol=1e-12)
    # ... and is itself a quadrature of the analytic area.
    analytic = (G.length * (G.lumen_height + 2 * G.wall_thickness)
                - G.bump_area())
    assert np.isclose(total, analytic, rtol=5e-3)
    # Wall strips have constant vertical extent: their area is exact.
    wall = subdomain_mesh(artery_mesh, Subdomain.WALL)
    assert np.isclose(np.abs(wall.signed_areas()).sum(),
                      2 * G.length * G.wall_thickness, rtol=1e-12)


def test_artery_mesh_labels(artery_mesh):
    v = artery_mesh.vertices
    for label, x_expect in ((BoundaryLabel.INLET, 0.0),
                            (BoundaryLabel.OUTLET, G.length)):
        edges = artery_mesh.edges_with_label(label)
        assert edges.shape[0] >= 2
        assert np.allclose(v[edges.ravel(), 0], x_expect, atol=1e-12)
        # inlet/outlet edges span exactly the open lumen
        ys = v[edges.ravel(), 1]
        assert np.isclose(ys.min(), 0.0, atol=1e-12)
        assert np.isclose(ys.max(), G.lumen_height, atol=1e-12)
    ifc = artery_mesh.edges_with_label(BoundaryLabel.INTERFACE)
    pts = v[ifc.ravel()]
    on_lower = np.abs(pts[:, 1] - G.bump(pts[:, 0])) < 1e-9
    on_upper = np.abs(pts[:, 1] - G.lumen_height) < 1e-9
    assert np.all(on_lower | on_upper)
    assert on_lower.any() and on_upper.any()
    for label in (BoundaryLabel.FIXED_WALL, BoundaryLabel.OUTER_WALL):
        assert artery_mesh.edges_with_label(label).shape[0] > 0


def test_artery_mesh_is_a_conforming_disk(artery_mesh):
    # Brute-force edge census: interior edges bound 2 triangles, exterior 1,
    # exterior set == labeled set, and Euler characteristic of a disk.
    tris = artery_mesh.triangles
    raw = np.sort(np.concatenate([tris[:, [1, 2]], tris[:, [2, 0]],
                                  tris[:, [0, 1]]]), axis=1)
    uniq, counts = np.unique(raw, axis=0, return_counts=True)
    assert set(np.unique(counts)) <= {1, 2}
    exterior = {tuple(e) for e in uniq[counts == 1]}
    by_label = {}
    for (a, b), lab in zip(artery_mesh.boundary_edges,
                           artery_mesh.boundary_labels):
        by_label.setdefault(int(lab), set()).add(tuple(sorted((int(a), int(b)))))
    interface = by_label.pop(int(BoundaryLabel.INTERFACE))
    labeled_exterior = set().union(*by_label.values())
    # interface edges are interior (lumen|wall); all other labels are exterior
    assert exterior == labeled_exterior
    count_of = {tuple(e): c for e, c in zip(map(tuple, uniq), counts)}
    assert all(count_of[e] == 2 for e in interface)
    chi = artery_mesh.n_vertices - uniq.shape[0] + artery_mesh.n_triangles
    assert chi == 1


def test_artery_mesh_mirror_symmetric(artery_mesh):
    xs = np.unique(artery_mesh.vertices[:, 0])
    assert np.allclose(np.sort(G.length - xs), xs, atol=1e-9)


def test_columns_refined_under_bump(artery_mesh):
    xs = np.unique(artery_mesh.vertices[:, 0])
    dx = np.diff(xs)
    mids = 0.5 * (xs[:-1] + xs[1:])
    steep = np.abs(mids - G.center) < 0.6 * G.bump_half_width
    far = np.abs(mids - G.center) > 2 * G.bump_half_width
    assert dx[steep].mean() < dx[far].mean()
    assert dx[steep].min() < 0.85 * dx[far].max()


def test_build_validates_parameters():
    with pytest.raises(ValueError, match="occlusion"):
        build_stenosed_artery(StenosisGeometry(occlusion=1.5))


# ---------------------------------------------------------------------------
# rectangle mesh
# ---------------------------------------------------------------------------


def test_rectangle_mesh_counts_and_area():
    m = rectangle_mesh(4, 3, width=2.0, height=1.5, origin=(1.0, -0.5))
    assert m.n_vertices == 5 * 4
    assert m.n_triangles == 2 * 4 * 3
    assert np.isclose(m.signed_areas().sum(), 3.0, rtol=1e-14)
    m.validate()
    with pytest.raises(ValueError, match="nx, ny"):
        rectangle_mesh(0, 3)


def test_rectangle_mesh_labels():
    m = rectangle_mesh(4, 3, labels=(BoundaryLabel.INLET, BoundaryLabel.OUTLET,
                                     BoundaryLabel.ZONE_GAMMA2,
                                     BoundaryLabel.ZONE_GAMMA1))
    assert m.edges_with_label(BoundaryLabel.INLET).shape[0] == 3
    assert m.edges_with_label(BoundaryLabel.OUTLET).shape[0] == 3
    bottom = m.edges_with_label(BoundaryLabel.ZONE_GAMMA2)
    assert bottom.shape[0] == 4
    assert np.allclose(m.vertices[bottom.ravel(), 1], 0.0, atol=1e-15)


def test_mesh_validate_catches_defects():
    m = rectangle_mesh(2, 2)
    with pytest.raises(MeshError, match="unlabeled"):
        Mesh(m.vertices, m.triangles, m.tri_tags,
             m.boundary_edges[:-1], m.boundary_labels[:-1]).validate()
    with pytest.raises(MeshError, match="out of range"):
        bad = m.triangles.copy()
        bad[0, 0] = 99
        Mesh(m.vertices, bad, m.tri_tags,
             m.boundary_edges, m.boundary_labels).validate()
    with pytest.raises(InvertedElementError):
        flipped = m.triangles.copy()
        flipped[3] = flipped[3][[0, 2, 1]]
        Mesh(m.vertices, flipped, m.tri_tags,
             m.boundary_edges, m.boundary_labels).validate()


def test_quality_reference_triangles():
    eq = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]]),
              np.array([[0, 1, 2]]), np.array([1]),
              np.array([[0, 1], [1, 2], [0, 2]]),
              np.array([6, 6, 6]))
    assert np.isclose(eq.quality()[0], 1.0, rtol=1e-12)
    right = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                 np.array([[0, 1, 2]]), np.array([1]),
                 np.array([[0, 1], [1, 2], [0, 2]]),
                 np.array([6, 6, 6]))
    assert np.isclose(right.quality()[0], 2.0 * (np.sqrt(2) - 1), rtol=1e-12)


# ---------------------------------------------------------------------------
# motion
# ---------------------------------------------------------------------------


def _vector_field(mesh, fn, degree=1):
    space = fem.FeSpace(mesh, degree=degree, arity=2)
    xy = space.dof_coords()
    vals = fn(xy)
    return fem.Field(space, np.concatenate([vals[:, 0], vals[:, 1]]))


def test_move_mesh_translates_vertices():
    m = rectangle_mesh(4, 4)
    d = _vector_field(m, lambda xy: 0.05 * np.column_stack(
        [np.sin(np.pi * xy[:, 1]), xy[:, 0] ** 2]))
    moved = move_mesh(m, d)
    assert np.allclose(moved.vertices,
                       m.vertices + d.vertex_values(), atol=1e-15)
    assert moved is not m and np.all(moved.signed_areas() > 0)
    # labels and connectivity are carried over
    assert np.array_equal(moved.boundary_labels, m.boundary_labels)


def test_move_mesh_detects_inversion():
    m = rectangle_mesh(3, 3)
    vals = np.zeros((m.n_vertices, 2))
    interior = np.nonzero(
        (np.abs(m.vertices[:, 0] - 1 / 3) < 1e-9)
        & (np.abs(m.vertices[:, 1] - 1 / 3) < 1e-9))[0]
    assert interior.size == 1
    vals[interior[0]] = (0.9, 0.9)  # push across the opposite edge
    space = fem.FeSpace(m, degree=1, arity=2)
    d = fem.Field(space, np.concatenate([vals[:, 0], vals[:, 1]]))
    with pytest.raises(InvertedElementError) as exc:
        move_mesh(m, d)
    assert exc.value.area <= 0


# ---------------------------------------------------------------------------
# submesh extraction
# ---------------------------------------------------------------------------


def test_extract_submesh_roundtrip():
    m = rectangle_mesh(6, 4, labels=(BoundaryLabel.INLET, BoundaryLabel.OUTLET,
                                     BoundaryLabel.INTERFACE,
                                     BoundaryLabel.INTERFACE))
    cents = m.tri_coords().mean(axis=1)
    pick = np.nonzero((cents[:, 0] < 0.5) & (cents[:, 1] < 0.5))[0]
    sub = extract_submesh(m, pick)
    assert np.array_equal(sub.parent_triangles, pick)
    assert np.allclose(sub.vertices, m.vertices[sub.parent_vertices])
    assert np.isclose(np.abs(sub.signed_areas()).sum(),
                      np.abs(m.signed_areas()[pick]).sum(), rtol=1e-14)
    # bottom edges sat on the parent INTERFACE -> ZONE_GAMMA2; cut edges
    # and the parent's left (INLET) edges -> ZONE_GAMMA1
    g2 = sub.edges_with_label(BoundaryLabel.ZONE_GAMMA2)
    assert g2.shape[0] > 0
    assert np.allclose(sub.vertices[g2.ravel(), 1], 0.0, atol=1e-15)
    g1 = sub.edges_with_label(BoundaryLabel.ZONE_GAMMA1)
    assert g1.shape[0] > 0
    assert np.all(sub.vertices[g1.ravel(), 1] > -1e-15)
    sub.validate()


def test_extract_submesh_rejects_bad_sets():
    m = rectangle_mesh(6, 1)
    with pytest.raises(ValueError, match="empty"):
        extract_submesh(m, np.empty(0, dtype=int))
    with pytest.raises(ValueError, match="disconnected"):
        extract_submesh(m, np.array([0, 11]))
    # but explicitly allowed when requested
    sub = extract_submesh(m, np.array([0, 11]), require_connected=False)
    assert sub.n_triangles == 2


def test_subdomain_mesh_preserves_labels(artery_mesh):
    lumen = subdomain_mesh(artery_mesh, Subdomain.LUMEN)
    assert np.all(lumen.tri_tags == int(Subdomain.LUMEN))
    for label in (BoundaryLabel.INLET, BoundaryLabel.OUTLET):
        assert (lumen.edges_with_label(label).shape[0]
                == artery_mesh.edges_with_label(label).shape[0])
    assert lumen.edges_with_label(BoundaryLabel.INTERFACE).shape[0] \
        == artery_mesh.edges_with_label(BoundaryLabel.INTERFACE).shape[0]
    with pytest.raises(ValueError, match="no triangles"):
        subdomain_mesh(lumen, Subdomain.WALL)
