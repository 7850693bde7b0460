"""Flow post-processing: maximum-shear-stress fields, running time averages,
point probes, recirculation detection, and solidification-zone detection.

All quantities are CGS internally (velocities cm/s, stresses barye, viscosity
poise).  The detection thresholds are accepted in the units they are usually
quoted in (viscosity in Pa*s, speed in cm/s) and converted here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem, units
from .geometry import BoundaryLabel, Mesh, extract_submesh
from .materials import max_shear

__all__ = [
    "max_shear",
    "max_shear_field",
    "speed_field",
    "element_means",
    "AverageTracker",
    "update_time_averages",
    "SolidificationRegion",
    "detect_regions",
    "detect_recirculation",
    "ProbeSeries",
    "probe",
]


# ---------------------------------------------------------------------------
# maximum shear stress
# ---------------------------------------------------------------------------


def fluid_stress_tensor(v: fem.Field, p: fem.Field, mu) -> np.ndarray:
    """Nodal fluid Cauchy stress 2*mu*D(v) - p*Id at mesh vertices, (nv,2,2)."""
    grad = fem.recover_gradient(v)                      # (nv, 2, 2)
    d = 0.5 * (grad + np.transpose(grad, (0, 2, 1)))
    mu_v = mu.vertex_values() if isinstance(mu, fem.Field) else float(mu)
    if isinstance(mu_v, np.ndarray):
        mu_v = mu_v[:, None, None]
    sigma = 2.0 * mu_v * d
    p_v = p.vertex_values()
    sigma[:, 0, 0] -= p_v
    sigma[:, 1, 1] -= p_v
    return sigma


def max_shear_field(v: fem.Field, p: fem.Field, mu) -> fem.Field:
    """Nodal maximum shear stress of the fluid Cauchy stress, degree-1 field.

    ``mu`` may be a scalar or a viscosity field on the same mesh.
    """
    mesh = v.space.mesh
    space = fem.FeSpace(mesh, degree=1, arity=1)
    return fem.Field(space, max_shear(fluid_stress_tensor(v, p, mu)))


def speed_field(v: fem.Field) -> fem.Field:
    """Degree-1 field of the speed |v| at mesh vertices."""
    vv = v.vertex_values()                              # (nv, 2)
    space = fem.FeSpace(v.space.mesh, degree=1, arity=1)
    return fem.Field(space, np.hypot(vv[:, 0], vv[:, 1]))


def element_means(field: fem.Field) -> np.ndarray:
    """Per-triangle mean of a scalar field's vertex values, shape (nt,)."""
    if field.space.arity != 1:
        raise ValueError("element_means expects a scalar field")
    vert = field.vertex_values()
    return vert[field.space.mesh.triangles].mean(axis=1)


# ---------------------------------------------------------------------------
# running time averages
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AverageTracker:
    """Running means over coupling steps, with exact 1/(k+1) weights.

    ``count`` is the number of samples already folded in; the state at t=0
    (constant zero-shear viscosity, zero displacement, zero speed) counts as
    the first sample.
    """

    mu_avg: fem.Field
    speed_avg: fem.Field
    disp_avg: fem.Field
    count: int

    @classmethod
    def from_initial(cls, mu0: fem.Field, disp0: fem.Field,
                     speed0: fem.Field) -> "AverageTracker":
        return cls(mu_avg=mu0.copy(), speed_avg=speed0.copy(),
                   disp_avg=disp0.copy(), count=1)


def _running_mean(avg: fem.Field, sample: fem.Field, k: int) -> fem.Field:
    if sample.space is not avg.space and sample.values.shape != avg.values.shape:
        raise ValueError("running-mean sample has a different layout than "
                         "the accumulated average")
    new = avg.values + (sample.values - avg.values) / (k + 1.0)
    return fem.Field(avg.space, new)


def update_time_averages(tracker: AverageTracker, mu: fem.Field,
                         disp: fem.Field,
                         speed: fem.Field) -> AverageTracker:
    """Fold one more sample into the running means (returns a new tracker)."""
    k = tracker.count
    return AverageTracker(
        mu_avg=_running_mean(tracker.mu_avg, mu, k),
        speed_avg=_running_mean(tracker.speed_avg, speed, k),
        disp_avg=_running_mean(tracker.disp_avg, disp, k),
        count=k + 1,
    )


# ---------------------------------------------------------------------------
# connected components of triangle sets
# ---------------------------------------------------------------------------


def _components(mesh: Mesh, member: np.ndarray) -> list[np.ndarray]:
    """Connected components (edge adjacency) of the True triangles."""
    nbr = mesh.neighbors()
    seen = ~member.copy()
    comps: list[np.ndarray] = []
    for seed in np.nonzero(member)[0]:
        if seen[seed]:
            continue
        stack = [int(seed)]
        seen[seed] = True
        comp = []
        while stack:
            t = stack.pop()
            comp.append(t)
            for u in nbr[t]:
                if u >= 0 and not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        comps.append(np.asarray(sorted(comp), dtype=np.int64))
    return comps


# ---------------------------------------------------------------------------
# solidification-zone detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolidificationRegion:
    """Triangles of the detected low-speed/high-viscosity zone.

    ``triangles`` indexes the host (lumen) mesh; ``mesh`` is the extracted
    submesh whose boundary is split into blood-facing ZONE_GAMMA1 edges and
    wall-facing ZONE_GAMMA2 edges (None when the region is empty).
    """

    triangles: np.ndarray
    mesh: Mesh | None
    detection_time: float

    @property
    def empty(self) -> bool:
        return self.triangles.size == 0

    @property
    def gamma1_edges(self) -> np.ndarray:
        if self.mesh is None:
            return np.empty((0, 2), dtype=np.int64)
        return self.mesh.edges_with_label(BoundaryLabel.ZONE_GAMMA1)

    @property
    def gamma2_edges(self) -> np.ndarray:
        if self.mesh is None:
            return np.empty((0, 2), dtype=np.int64)
        return self.mesh.edges_with_label(BoundaryLabel.ZONE_GAMMA2)

    def centroid(self) -> np.ndarray:
        if self.empty:
            raise ValueError("empty region has no centroid")
        host = None if self.mesh is None else self.mesh
        pts = host.tri_coords()
        areas = np.abs(host.signed_areas())
        cents = pts.mean(axis=1)
        return (areas[:, None] * cents).sum(axis=0) / areas.sum()


def detect_regions(mu_avg: fem.Field, v_avg: fem.Field,
                   mu_threshold: float = 0.04, v_threshold: float = 0.1,
                   downstream_of: float | None = None,
                   detection_time: float = 0.0) -> SolidificationRegion:
    """Detect the solidification zone on the lumen mesh.

    A triangle belongs to the high-viscosity set when its element-mean
    average viscosity exceeds ``mu_threshold`` (given in Pa*s; the field is
    in poise) and to the low-speed set when its element-mean average speed
    is below ``v_threshold`` (cm/s).  The result is the largest connected
    component of the intersection; if ``downstream_of`` is given, only
    components whose area centroid lies at x > downstream_of are considered.
    An empty intersection yields an empty region, not an error.
    """
    mesh = mu_avg.space.mesh
    if v_avg.space.mesh is not mesh:
        raise ValueError("viscosity and speed averages live on different meshes")
    member = ((element_means(mu_avg) > mu_threshold * units.PA_S)
              & (element_means(v_avg) < v_threshold))
    comps = _components(mesh, member)
    if downstream_of is not None:
        areas = np.abs(mesh.signed_areas())
        cents = mesh.tri_coords().mean(axis=1)

        def centroid_x(tris):
            a = areas[tris]
            return float((a * cents[tris, 0]).sum() / a.sum())

        comps = [c for c in comps if centroid_x(c) > downstream_of]
    if not comps:
        return SolidificationRegion(np.empty(0, dtype=np.int64), None,
                                    detection_time)
    areas = np.abs(mesh.signed_areas())
    best = max(comps, key=lambda c: areas[c].sum())
    sub = extract_submesh(mesh, best)
    return SolidificationRegion(best, sub, detection_time)


def detect_recirculation(v: fem.Field,
                         threshold: float = 1e-3) -> list[np.ndarray]:
    """Connected triangle sets with reversed axial flow.

    A triangle counts as recirculating when the element mean of the
    x-velocity is below ``-threshold`` (main flow direction +x).  Components
    are returned largest-area first.
    """
    mesh = v.space.mesh
    vx = v.vertex_values()[:, 0]
    member = vx[mesh.triangles].mean(axis=1) < -threshold
    comps = _components(mesh, member)
    areas = np.abs(mesh.signed_areas())
    return sorted(comps, key=lambda c: -areas[c].sum())


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------


def probe(mu: fem.Field, shear: fem.Field, v: fem.Field,
          points) -> tuple[np.ndarray, np.ndarray]:
    """Sample (viscosity, max shear stress, speed) at the given points.

    Returns ``(values, inside)`` where values has shape (n_points, 3) and
    rows for points outside the mesh are NaN with inside=False.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mu_v, in1 = mu.eval_many(pts)
    sh_v, in2 = shear.eval_many(pts)
    vv, in3 = v.eval_many(pts)
    inside = in1 & in2 & in3
    out = np.full((pts.shape[0], 3), np.nan)
    out[inside, 0] = mu_v[inside]
    out[inside, 1] = sh_v[inside]
    out[inside, 2] = np.hypot(vv[inside, 0], vv[inside, 1])
    return out, inside


class ProbeSeries:
    """Time series of (viscosity, max shear, speed) at fixed probe points."""

    def __init__(self, points, names=None):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.points.shape[0]
        self.names = list(names) if names is not None else [
            chr(ord("A") + i) for i in range(n)]
        if len(self.names) != n:
            raise ValueError("one name per probe point required")
        self.times: list[float] = []
        self.samples: list[np.ndarray] = []
        self.inside: list[np.ndarray] = []

    def sample(self, t: float, mu: fem.Field, shear: fem.Field,
               v: fem.Field) -> None:
        values, ok = probe(mu, shear, v, self.points)
        self.times.append(float(t))
        self.samples.append(values)
        self.inside.append(ok)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(times (n_t,), values (n_t, n_points, 3))."""
        return (np.asarray(self.times),
                np.stack(self.samples) if self.samples
                else np.empty((0, self.points.shape[0], 3)))
