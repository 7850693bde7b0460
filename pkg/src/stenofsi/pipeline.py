"""End-to-end run: coupled flow, zone detection, and rupture diagnostics.

Stages: build the artery mesh, advance the fluid--wall coupling while
accumulating time averages, threshold the averages at the detection time
into a solidification zone, then keep stepping while solving the zone's
elasticity problem against live boundary data.  Outputs are flushed as
they are produced so a failed run keeps every completed step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import analysis, fem, io
from .analysis import AverageTracker, SolidificationRegion, update_time_averages
from .config import RunConfig
from .coupling import CouplingState, coupling_step, initial_coupling_state
from .fluid import boundary_flux
from .geometry import (BoundaryLabel, Mesh, MeshError, build_stenosed_artery)
from .materials import LameParams
from .rupture import ClotProblem, clot_solve, zone_diagnostics
from .structure import NewtonError

__all__ = ["RunResult", "run", "run_pipeline",
           "load_averages", "save_averages",
           "load_snapshot", "solve_snapshot"]

log = logging.getLogger("stenofsi")

#: Exceptions that indicate a numerical failure rather than a broken setup.
SOLVER_ERRORS = (NewtonError, MeshError, fem.FemError, RuntimeError,
                 FloatingPointError, np.linalg.LinAlgError)

MAIN_CSV_COLUMNS = [
    "step", "time", "flux_in", "flux_out", "peak_speed",
    "viscosity_min", "viscosity_max", "newton_iterations", "min_quality",
    "divergence", "max_interface_displacement",
]

RUPTURE_CSV_COLUMNS = [
    "step", "time", "u_avg_zone", "u_avg_gamma1", "u_avg_gamma2",
    "traction_x", "traction_y", "traction_magnitude", "max_shear_avg_gamma1",
]


@dataclass
class RunResult:
    """What a finished (or partially finished) run produced."""

    steps_completed: int
    region: SolidificationRegion | None
    rupture_steps: int
    warnings: list[str] = dc_field(default_factory=list)
    output_dir: Path | None = None


# ---------------------------------------------------------------------------
# zone boundary data gathered from the running simulation
# ---------------------------------------------------------------------------


def _zone_edge_dofs(zone: Mesh, lumen: Mesh, edges: np.ndarray) -> np.ndarray:
    """Degree-2 scalar dof ids in the lumen space per zone edge (m, 3)."""
    parent = zone.parent_vertices
    idx = lumen.edge_index()
    nv = lumen.n_vertices
    out = np.empty((edges.shape[0], 3), dtype=np.int64)
    for i, (a, b) in enumerate(edges):
        pa, pb = int(parent[a]), int(parent[b])
        out[i, 0], out[i, 1] = pa, pb
        out[i, 2] = nv + idx[(pa, pb) if pa < pb else (pb, pa)]
    return out


def _gamma2_displacement(zone: Mesh, lumen: Mesh, dxi: np.ndarray,
                         nsc: int) -> np.ndarray:
    """Wall displacement since detection on the zone's Gamma2 edges (m,3,2)."""
    g2 = zone.edges_with_label(BoundaryLabel.ZONE_GAMMA2)
    ids = _zone_edge_dofs(zone, lumen, g2)
    return np.stack([dxi[ids], dxi[ids + nsc]], axis=-1)


def _gamma1_stress(zone: Mesh, sigma_vertices: np.ndarray) -> np.ndarray:
    """Fluid Cauchy tensor at Gamma1 edge nodes (m, 3, 2, 2); midpoints
    average the endpoint values (the recovered stress is vertex-based)."""
    g1 = zone.edges_with_label(BoundaryLabel.ZONE_GAMMA1)
    parent = zone.parent_vertices
    ends0 = sigma_vertices[parent[g1[:, 0]]]
    ends1 = sigma_vertices[parent[g1[:, 1]]]
    return np.stack([ends0, ends1, 0.5 * (ends0 + ends1)], axis=1)


def _gamma1_traction(zone: Mesh, sig_edges: np.ndarray,
                     normals: np.ndarray) -> np.ndarray:
    """Traction vectors sigma . n_c per Gamma1 edge node (m, 3, 2)."""
    return np.einsum("mbij,mj->mbi", sig_edges, normals)


# ---------------------------------------------------------------------------
# saved intermediates (consumed by the detect / rupture subcommands)
# ---------------------------------------------------------------------------


def _mesh_arrays(mesh: Mesh, prefix: str) -> dict:
    return {
        f"{prefix}vertices": mesh.vertices,
        f"{prefix}triangles": mesh.triangles,
        f"{prefix}tri_tags": mesh.tri_tags,
        f"{prefix}boundary_edges": mesh.boundary_edges,
        f"{prefix}boundary_labels": mesh.boundary_labels,
    }


def _mesh_from_arrays(data, prefix: str) -> Mesh:
    return Mesh(data[f"{prefix}vertices"], data[f"{prefix}triangles"],
                data[f"{prefix}tri_tags"], data[f"{prefix}boundary_edges"],
                data[f"{prefix}boundary_labels"])


def save_averages(path, tracker: AverageTracker, detection_time: float) -> None:
    """Persist the averaged fields with their mesh for later thresholding."""
    mesh = tracker.mu_avg.space.mesh
    np.savez(path, **_mesh_arrays(mesh, ""),
             mu_avg=tracker.mu_avg.values,
             speed_avg=tracker.speed_avg.values,
             disp_avg=tracker.disp_avg.values,
             count=tracker.count, detection_time=detection_time)


def load_averages(path) -> tuple[AverageTracker, float]:
    """Rebuild the averaged fields saved by :func:`save_averages`."""
    data = np.load(path)
    mesh = _mesh_from_arrays(data, "")
    space = fem.FeSpace(mesh, degree=1, arity=1)
    tracker = AverageTracker(
        mu_avg=fem.Field(space, data["mu_avg"]),
        speed_avg=fem.Field(space, data["speed_avg"]),
        disp_avg=fem.Field(space, data["disp_avg"]),
        count=int(data["count"]))
    return tracker, float(data["detection_time"])


def save_snapshot(path, zone: Mesh, lame: LameParams,
                  gamma1_traction: np.ndarray,
                  gamma2_displacement: np.ndarray,
                  gamma1_stress: np.ndarray, time: float) -> None:
    """Persist one rupture-solve input set (zone, material, boundary data)."""
    np.savez(path, **_mesh_arrays(zone, "zone_"),
             youngs_modulus=lame.youngs_modulus, poisson=lame.poisson,
             gamma1_traction=gamma1_traction,
             gamma2_displacement=gamma2_displacement,
             gamma1_stress=gamma1_stress, time=time)


def load_snapshot(path) -> tuple[ClotProblem, np.ndarray, float]:
    """Rebuild the saved rupture inputs: (problem, gamma1 stress, time)."""
    data = np.load(path)
    zone = _mesh_from_arrays(data, "zone_")
    lame = LameParams(youngs_modulus=float(data["youngs_modulus"]),
                      poisson=float(data["poisson"]))
    prob = ClotProblem(zone, lame,
                       gamma1_traction=data["gamma1_traction"],
                       gamma2_displacement=data["gamma2_displacement"])
    return prob, data["gamma1_stress"], float(data["time"])


def solve_snapshot(path):
    """Clot solve + diagnostics on a saved snapshot."""
    prob, sigma, time = load_snapshot(path)
    sol = clot_solve(prob)
    return sol, zone_diagnostics(sol, sigma), time


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fluid_vtk(path, state: CouplingState) -> None:
    mesh = state.fluid.mesh
    v = state.fluid.v.vertex_values()
    io.write_vtk(path, mesh, point_data={
        "velocity": v,
        "speed": np.hypot(v[:, 0], v[:, 1]),
        "pressure": state.fluid.p.vertex_values(),
        "viscosity": state.mu.vertex_values(),
    })


def _wall_vtk(path, state: CouplingState) -> None:
    wall = state.coupled.wall
    xi = state.solid.xi_s
    nsc = xi.space.n_scalar
    disp = np.column_stack([xi.values[:wall.n_vertices],
                            xi.values[nsc:nsc + wall.n_vertices]])
    io.write_vtk(path, wall, point_data={
        "displacement": disp,
        "pressure": state.solid.p_hs.vertex_values(),
    })


def _zone_vtk(path, sol, diag) -> None:
    zone = sol.u.space.mesh
    io.write_vtk(path, zone, point_data={
        "displacement": sol.u.vertex_values(),
        "max_shear": diag.max_shear_zone.values,
    })


def _main_row(diag, flux_in: float, flux_out: float) -> list:
    return [diag.n, diag.t, flux_in, flux_out, diag.max_speed,
            diag.viscosity_min, diag.viscosity_max,
            diag.newton_iterations, diag.min_quality, diag.divergence,
            diag.max_interface_displacement]


def _probe_columns(names: list[str]) -> list[str]:
    cols = []
    for name in names:
        cols += [f"viscosity_{name}", f"max_shear_{name}", f"speed_{name}"]
    return cols


# ---------------------------------------------------------------------------
# the run itself
# ---------------------------------------------------------------------------


def run(cfg: RunConfig) -> RunResult:
    """Execute the full pipeline; raises on solver and IO failures."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = RunResult(steps_completed=0, region=None, rupture_steps=0,
                       output_dir=out)

    dt = cfg.fluid.dt
    n_total = max(1, int(round(cfg.t_end / dt)))
    n_detect = int(round(cfg.detection_time / dt))
    if n_detect > n_total:
        msg = (f"detection time {cfg.detection_time} s lies beyond the last "
               f"step ({n_total} steps of {dt} s): detection skipped")
        log.warning(msg)
        result.warnings.append(msg)

    mesh = build_stenosed_artery(cfg.geometry)
    ccfg = cfg.coupling()
    state = initial_coupling_state(mesh, ccfg)
    lumen = state.coupled.lumen
    p1 = fem.FeSpace(lumen, degree=1, arity=1)
    nv = lumen.n_vertices

    def p1_field(values) -> fem.Field:
        return fem.Field(p1, np.asarray(values, dtype=float))

    def displacement_magnitude(xi: fem.Field) -> np.ndarray:
        return np.hypot(xi.values[:nv], xi.values[xi.space.n_scalar:][:nv])

    tracker = AverageTracker.from_initial(
        p1_field(state.mu.values),
        p1_field(displacement_magnitude(state.xi_f)),
        analysis.speed_field(state.fluid.v))

    probes = analysis.ProbeSeries(cfg.probe_points) \
        if cfg.probe_points.shape[0] else None
    header = MAIN_CSV_COLUMNS + (_probe_columns(probes.names) if probes else [])

    io.write_vtk(out / "mesh.vtk", mesh,
                 cell_data={"subdomain": mesh.tri_tags.astype(float),
                            "quality": mesh.quality()})

    region: SolidificationRegion | None = None
    xi_at_detection: np.ndarray | None = None
    zone_normals: np.ndarray | None = None
    rupture_log: io.CsvLog | None = None

    with io.CsvLog(out / "flow.csv", header) as flow_log:
        try:
            for n in range(1, n_total + 1):
                state, diag = coupling_step(state, ccfg)
                flux_in = boundary_flux(state.fluid, BoundaryLabel.INLET)
                flux_out = -boundary_flux(state.fluid, BoundaryLabel.OUTLET)
                row = _main_row(diag, flux_in, flux_out)
                if probes is not None:
                    shear = analysis.max_shear_field(
                        state.fluid.v, state.fluid.p, state.mu)
                    probes.sample(state.t, state.mu, shear, state.fluid.v)
                    row += list(probes.samples[-1].reshape(-1))
                flow_log.write_row(row)
                result.steps_completed = n

                tracker = update_time_averages(
                    tracker,
                    p1_field(state.mu.values),
                    p1_field(displacement_magnitude(state.xi_f)),
                    p1_field(analysis.speed_field(state.fluid.v).values))

                if n % cfg.vtk_every == 0:
                    _fluid_vtk(out / f"fluid_{n:05d}.vtk", state)
                    _wall_vtk(out / f"wall_{n:05d}.vtk", state)

                if n == n_detect:
                    save_averages(out / "averages.npz", tracker,
                                  cfg.detection_time)
                    # Keep only components genuinely downstream of the bump
                    # apex (by half an element, so a stagnant-at-rest domain
                    # whose centroid sits exactly at the symmetric apex does
                    # not count as a solidification zone).
                    region = analysis.detect_regions(
                        tracker.mu_avg, tracker.speed_avg,
                        mu_threshold=cfg.mu_threshold,
                        v_threshold=cfg.v_threshold,
                        downstream_of=(cfg.geometry.center
                                       + 0.5 * cfg.geometry.mesh_size),
                        detection_time=state.t)
                    result.region = region
                    if region.empty:
                        msg = ("no solidification region found at "
                               f"t = {state.t:g} s: rupture stage skipped")
                        log.warning(msg)
                        result.warnings.append(msg)
                    else:
                        cen = region.centroid()
                        log.info("solidification zone: %d triangles, "
                                 "centroid (%.3f, %.3f)",
                                 region.triangles.size, cen[0], cen[1])
                        xi_at_detection = state.xi_f.values.copy()
                        zone_normals = fem.EdgeBatch(
                            region.mesh,
                            region.mesh.edges_with_label(
                                BoundaryLabel.ZONE_GAMMA1)).normals
                        rupture_log = io.CsvLog(out / "rupture.csv",
                                                RUPTURE_CSV_COLUMNS)

                if (region is not None and not region.empty
                        and n > n_detect):
                    zone = region.mesh
                    dxi = state.xi_f.values - xi_at_detection
                    g2_data = _gamma2_displacement(
                        zone, lumen, dxi, state.xi_f.space.n_scalar)
                    sigma_v = analysis.fluid_stress_tensor(
                        state.fluid.v, state.fluid.p, state.mu)
                    sig_edges = _gamma1_stress(zone, sigma_v)
                    traction = _gamma1_traction(zone, sig_edges, zone_normals)
                    prob = ClotProblem(zone, cfg.clot,
                                       gamma1_traction=traction,
                                       gamma2_displacement=g2_data)
                    sol = clot_solve(prob)
                    zdiag = zone_diagnostics(sol, sig_edges)
                    rupture_log.write_row([
                        n, state.t, zdiag.u_avg_zone, zdiag.u_avg_gamma1,
                        zdiag.u_avg_gamma2, zdiag.traction_avg[0],
                        zdiag.traction_avg[1], zdiag.traction_magnitude,
                        zdiag.max_shear_avg_gamma1])
                    save_snapshot(out / "snapshot.npz", zone, cfg.clot,
                                  traction, g2_data, sig_edges, state.t)
                    result.rupture_steps += 1
                    if n % cfg.vtk_every == 0:
                        _zone_vtk(out / f"zone_{n:05d}.vtk", sol, zdiag)

                if n % 50 == 0 or n == n_total:
                    log.info("step %d/%d  t=%.3f  peak speed %.3f cm/s  "
                             "quality %.3f", n, n_total, state.t,
                             diag.max_speed, diag.min_quality)
        finally:
            if rupture_log is not None:
                rupture_log.close()

    return result


def run_pipeline(cfg: RunConfig) -> int:
    """Run and map the outcome to a process exit status.

    0 on success (including an empty detection region), 2 on solver
    failure, 3 on IO failure; partial outputs remain on disk.
    """
    try:
        result = run(cfg)
    except SOLVER_ERRORS as exc:
        log.error("solver failure: %s", exc)
        return 2
    except OSError as exc:
        log.error("IO failure: %s", exc)
        return 3
    log.info("completed %d steps (%d rupture-analysis steps)",
             result.steps_completed, result.rupture_steps)
    return 0
