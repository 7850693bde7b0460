"""Command-line entry points.

Subcommands: ``mesh`` (geometry only), ``run`` (full pipeline), ``detect``
(threshold saved averaged fields), ``rupture`` (clot solve on a saved
snapshot).  Exit codes: 0 success, 1 configuration error, 2 solver
failure, 3 IO failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, io, pipeline
from .config import ConfigError, RunConfig, load_config
from .geometry import build_stenosed_artery

log = logging.getLogger("stenofsi")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stenofsi",
        description="Blood flow through a stenosed artery: coupled "
                    "flow/wall simulation, solidification-zone detection, "
                    "and rupture analysis.")
    p.add_argument("--config", metavar="PATH",
                   help="TOML run configuration (default: built-in values)")
    p.add_argument("--out", metavar="DIR",
                   help="output directory (overrides the config)")
    p.add_argument("--quiet", action="store_true",
                   help="only warnings and errors")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("mesh", help="build the artery mesh and write mesh.vtk")

    runp = sub.add_parser("run", help="run the full pipeline")
    runp.add_argument("--steps", type=int, metavar="N",
                      help="total number of time steps (overrides rupture.t_end)")
    runp.add_argument("--dt", type=float, metavar="SECONDS",
                      help="time step override")

    det = sub.add_parser("detect", help="threshold saved averaged fields")
    det.add_argument("--averages", metavar="PATH",
                     help="averages file (default: OUT/averages.npz)")

    rup = sub.add_parser("rupture", help="clot solve on a saved snapshot")
    rup.add_argument("--snapshot", metavar="PATH",
                     help="snapshot file (default: OUT/snapshot.npz)")
    return p


def _configure(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    if getattr(args, "dt", None) is not None:
        try:
            fluid = dataclasses.replace(cfg.fluid, dt=args.dt)
        except ValueError as exc:
            raise ConfigError("fluid.dt", str(exc)) from exc
        cfg = dataclasses.replace(cfg, fluid=fluid)
    if getattr(args, "steps", None) is not None:
        if args.steps < 1:
            raise ConfigError("steps", "must be at least 1")
        cfg = dataclasses.replace(cfg, t_end=args.steps * cfg.fluid.dt)
    return cfg


def _cmd_mesh(cfg: RunConfig) -> int:
    mesh = build_stenosed_artery(cfg.geometry)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "mesh.vtk"
    io.write_vtk(path, mesh,
                 cell_data={"subdomain": mesh.tri_tags.astype(float),
                            "quality": mesh.quality()})
    log.info("%d vertices, %d triangles, min quality %.3f -> %s",
             mesh.n_vertices, mesh.n_triangles,
             float(mesh.quality().min()), path)
    return 0


def _cmd_detect(cfg: RunConfig, averages_path) -> int:
    path = Path(averages_path) if averages_path \
        else Path(cfg.output_dir) / "averages.npz"
    tracker, t0 = pipeline.load_averages(path)
    region = analysis.detect_regions(tracker.mu_avg, tracker.speed_avg,
                                     mu_threshold=cfg.mu_threshold,
                                     v_threshold=cfg.v_threshold,
                                     detection_time=t0)
    if region.empty:
        log.warning("no solidification region above the thresholds")
        return 0
    cen = region.centroid()
    zone = region.mesh
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    vtk = out / "zone.vtk"
    io.write_vtk(vtk, zone, cell_data={
        "area": np.abs(zone.signed_areas())})
    log.info("zone: %d triangles, area %.4f cm^2, centroid (%.3f, %.3f) -> %s",
             region.triangles.size, float(np.abs(zone.signed_areas()).sum()),
             cen[0], cen[1], vtk)
    return 0


def _cmd_rupture(cfg: RunConfig, snapshot_path) -> int:
    path = Path(snapshot_path) if snapshot_path \
        else Path(cfg.output_dir) / "snapshot.npz"
    sol, diag, time = pipeline.solve_snapshot(path)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    vtk = out / "zone_rupture.vtk"
    io.write_vtk(vtk, sol.u.space.mesh, point_data={
        "displacement": sol.u.vertex_values(),
        "max_shear": diag.max_shear_zone.values})
    log.info("t = %g s: |u| avg %.3e cm (zone) %.3e (G1) %.3e (G2), "
             "traction %.3e barye, max shear on G1 %.3e barye -> %s",
             time, diag.u_avg_zone, diag.u_avg_gamma1, diag.u_avg_gamma2,
             diag.traction_magnitude, diag.max_shear_avg_gamma1, vtk)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s")
    try:
        cfg = _configure(args)
    except ConfigError as exc:
        log.error("configuration: %s", exc)
        return 1
    try:
        if args.command == "mesh":
            return _cmd_mesh(cfg)
        if args.command == "run":
            return pipeline.run_pipeline(cfg)
        if args.command == "detect":
            return _cmd_detect(cfg, args.averages)
        if args.command == "rupture":
            return _cmd_rupture(cfg, args.snapshot)
    except pipeline.SOLVER_ERRORS as exc:
        log.error("solver failure: %s", exc)
        return 2
    except OSError as exc:
        log.error("IO failure: %s", exc)
        return 3
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
