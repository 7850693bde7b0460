"""Pure NumPy point-location backend.

Strategy: test caller-provided hint triangles first, then triangles near
the query point (KD-tree over centroids), then fall back to an exhaustive
scan for the stragglers.  Matches the native walk backend bit-for-bit on
the accept/reject decision (same barycentric tolerance).
"""

from __future__ import annotations

import numpy as np


def barycentric(verts, tris, tri_ids, pts):
    """Barycentric coordinates of pts (n,2) w.r.t. triangles tri_ids (n,)."""
    p = verts[tris[tri_ids]]
    v0 = p[:, 0]
    d1 = p[:, 1] - v0
    d2 = p[:, 2] - v0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    r = pts - v0
    l2 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
    l3 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
    return np.column_stack([1.0 - l2 - l3, l2, l3])


def _scan_all(verts, tris, pt, tol):
    """Exhaustive scan for a single point; returns (tri, bary) or (-1, zeros)."""
    n = tris.shape[0]
    bary = barycentric(verts, tris, np.arange(n), np.broadcast_to(pt, (n, 2)))
    mins = bary.min(axis=1)
    best = int(np.argmax(mins))
    if mins[best] >= -tol:
        return best, bary[best]
    return -1, np.zeros(3)


def locate(locator, pts, hints=None, tol=1e-10, k_candidates=16):
    """Locate pts in the locator's mesh.

    Returns (tri_ids, bary): tri_ids is -1 for points outside the mesh.
    """
    n = pts.shape[0]
    tri_ids = np.full(n, -2, dtype=np.int64)
    bary = np.zeros((n, 3))
    verts, tris = locator.verts, locator.tris

    def accept(idx, cand):
        b = barycentric(verts, tris, cand, pts[idx])
        ok = b.min(axis=1) >= -tol
        good = idx[ok]
        tri_ids[good] = cand[ok]
        bary[good] = b[ok]

    if hints is not None:
        idx = np.arange(n)
        cand = np.clip(np.asarray(hints, dtype=np.int64), 0, tris.shape[0] - 1)
        accept(idx, cand)

    todo = np.nonzero(tri_ids == -2)[0]
    if todo.size:
        k = min(k_candidates, tris.shape[0])
        _, near = locator.tree.query(pts[todo], k=k)
        near = near.reshape(todo.size, k)
        for j in range(k):
            rem = tri_ids[todo] == -2
            if not rem.any():
                break
            idx = todo[rem]
            accept(idx, near[rem, j].astype(np.int64))

    for i in np.nonzero(tri_ids == -2)[0]:
        t, b = _scan_all(verts, tris, pts[i], tol)
        tri_ids[i] = t
        bary[i] = b

    return tri_ids, bary
