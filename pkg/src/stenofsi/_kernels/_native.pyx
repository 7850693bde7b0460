# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled point-location kernel.

Walks the triangle adjacency graph from a hint element toward the query
point (the classic visibility walk), falling back to an exhaustive scan
when the walk exits the mesh or cycles (possible on non-convex domains).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _bary(const double[:, ::1] verts, const int[:, ::1] tris,
                       int t, double px, double py, double* l) noexcept nogil:
    cdef double x0 = verts[tris[t, 0], 0]
    cdef double y0 = verts[tris[t, 0], 1]
    cdef double d1x = verts[tris[t, 1], 0] - x0
    cdef double d1y = verts[tris[t, 1], 1] - y0
    cdef double d2x = verts[tris[t, 2], 0] - x0
    cdef double d2y = verts[tris[t, 2], 1] - y0
    cdef double det = d1x * d2y - d1y * d2x
    cdef double rx = px - x0
    cdef double ry = py - y0
    l[1] = (rx * d2y - ry * d2x) / det
    l[2] = (d1x * ry - d1y * rx) / det
    l[0] = 1.0 - l[1] - l[2]


def locate_walk(const double[:, ::1] verts, const int[:, ::1] tris,
                const int[:, ::1] nbrs, const double[:, ::1] pts,
                const cnp.int64_t[::1] hints, double tol,
                cnp.int64_t[::1] out_tri, double[:, ::1] out_bary):
    """Fill out_tri/out_bary with containing triangles (-1 = outside)."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef int nt = <int>tris.shape[0]
    cdef Py_ssize_t i
    cdef int t, tn, k, kmin, steps, found, best_t
    cdef double px, py, m, best
    cdef double l[3]
    with nogil:
        for i in range(n):
            px = pts[i, 0]
            py = pts[i, 1]
            t = <int>hints[i]
            if t < 0 or t >= nt:
                t = 0
            found = 0
            for steps in range(256):
                _bary(verts, tris, t, px, py, l)
                kmin = 0
                if l[1] < l[kmin]:
                    kmin = 1
                if l[2] < l[kmin]:
                    kmin = 2
                if l[kmin] >= -tol:
                    out_tri[i] = t
                    out_bary[i, 0] = l[0]
                    out_bary[i, 1] = l[1]
                    out_bary[i, 2] = l[2]
                    found = 1
                    break
                # Local vertex kmin has the most negative coordinate; the
                # edge opposite it separates us from the point.
                tn = nbrs[t, kmin]
                if tn < 0:
                    break
                t = tn
            if found:
                continue
            # Exhaustive fallback: keep the triangle with the largest
            # minimum barycentric coordinate.
            best = -1e300
            best_t = -1
            for t in range(nt):
                _bary(verts, tris, t, px, py, l)
                m = l[0]
                if l[1] < m:
                    m = l[1]
                if l[2] < m:
                    m = l[2]
                if m > best:
                    best = m
                    best_t = t
            if best >= -tol and best_t >= 0:
                _bary(verts, tris, best_t, px, py, l)
                out_tri[i] = best_t
                out_bary[i, 0] = l[0]
                out_bary[i, 1] = l[1]
                out_bary[i, 2] = l[2]
            else:
                out_tri[i] = -1
                out_bary[i, 0] = 0.0
                out_bary[i, 1] = 0.0
                out_bary[i, 2] = 0.0
    return None
