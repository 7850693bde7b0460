"""Point-location kernels with a compiled core and a pure NumPy fallback.

The compiled module (``stenofsi._kernels._native``, Cython) walks the
triangle adjacency graph per query point — the dominant scalar loop of the
semi-Lagrangian transport term.  If it is unavailable, or the environment
variable ``STENOFSI_PURE_KERNELS=1`` is set, the NumPy fallback in
``pure.py`` is used instead.  Both backends implement the same contract.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.spatial import cKDTree

from . import pure

_native = None
backend_name = "pure"
if os.environ.get("STENOFSI_PURE_KERNELS", "") != "1":
    try:
        import importlib

        _native = importlib.import_module("._native", __package__)
        backend_name = "native"
    except ImportError:
        _native = None


def active_backend() -> str:
    """Name of the backend actually in use: 'native' or 'pure'."""
    return backend_name


class MeshLocator:
    """Locates query points in a triangle mesh.

    Parameters
    ----------
    mesh : geometry.Mesh
        The mesh to search.  Connectivity is captured at construction;
        the locator must be rebuilt if vertices move.
    """

    def __init__(self, mesh, force_backend: str | None = None):
        self.verts = np.ascontiguousarray(mesh.vertices)
        self.tris = np.ascontiguousarray(mesh.triangles, dtype=np.int32)
        self.nbrs = np.ascontiguousarray(mesh.neighbors(), dtype=np.int32)
        self.centroids = self.verts[self.tris].mean(axis=1)
        self.tree = cKDTree(self.centroids)
        if force_backend is None:
            self.backend = backend_name
        else:
            if force_backend == "native" and _native is None:
                raise RuntimeError("native kernel backend is not available")
            self.backend = force_backend

    def locate(self, pts, hints=None, tol: float = 1e-10):
        """Find containing triangles and barycentric coordinates.

        Parameters
        ----------
        pts : (n, 2) array
        hints : (n,) int array, optional
            Triangle to try first per point (e.g. the element a
            characteristic foot departed from).
        tol : float
            Barycentric acceptance tolerance; points within ``-tol`` of an
            element are treated as inside it.

        Returns
        -------
        tri_ids : (n,) int64 array, -1 where the point is outside the mesh
        bary : (n, 3) float array
        """
        pts = np.ascontiguousarray(pts, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("pts must have shape (n, 2)")
        if pts.shape[0] == 0:
            return np.empty(0, dtype=np.int64), np.empty((0, 3))
        if hints is None:
            _, hints = self.tree.query(pts, k=1)
        hints = np.ascontiguousarray(hints, dtype=np.int64)
        if self.backend == "native":
            tri_ids = np.empty(pts.shape[0], dtype=np.int64)
            bary = np.empty((pts.shape[0], 3))
            _native.locate_walk(self.verts, self.tris, self.nbrs, pts, hints,
                                tol, tri_ids, bary)
            return tri_ids, bary
        return pure.locate(self, pts, hints=hints, tol=tol)
