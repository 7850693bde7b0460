"""Run configuration: documented keys, per-key units, validated defaults.

A run is configured by a TOML file.  Every key is optional; the defaults
are the reference blood/wall parameter set.  Numeric values are taken in
the documented unit of the key; a string of the form ``"0.056 Pa.s"``
supplies another unit of the same dimension and is converted.  All stored
quantities are internal CGS (cm, g, s) except the detection thresholds,
which keep the units their consumers document (Pa.s and cm/s).

Documented keys::

    [geometry]
    length = 6.0              # cm           artery segment length
    lumen_height = 1.0        # cm           open channel height
    wall_thickness = 0.1      # cm           per wall
    occlusion = 0.4           # -            fraction of the half-height
    bump_center = 3.0         # cm           default: mid-length
    bump_half_width = 0.75    # cm
    mesh_size = 0.1           # cm           target edge length

    [fluid]
    density = 1.056           # g/cm3
    epsilon = 1e-6            # -            pressure penalty
    dt = 0.01                 # s
    inlet_amplitude = 5.0     # cm/s         waveform peak
    waveform = "continuous"   # continuous | gated | steady

    [viscosity]
    relaxation = 3.313        # s            Carreau relaxation time
    exponent = 0.3568         # -            Carreau power index
    mu0 = "0.056 Pa.s"        # viscosity    zero-shear plateau
    mu_inf = "0.00345 Pa.s"   # viscosity    infinite-shear plateau
    history = true            # -            residence-time stiffening

    [wall]
    c0 = "110 N/cm2"          # stress       energy offset
    c1 = "100 N/cm2"          # stress
    c2 = "110 N/cm2"          # stress

    [newton]
    tol = 1e-8                # -            residual tolerance
    max_iter = 20             # -

    [clot]
    youngs_modulus = "14.5 MPa"  # stress
    poisson = 0.492           # -

    [detection]
    mu_threshold = "0.04 Pa.s"   # viscosity
    v_threshold = 0.1         # cm/s
    time = 3.0                # s            averaging window end t0

    [rupture]
    t_end = 4.0               # s            end of the analysis window

    [output]
    directory = "out"
    vtk_every = 5             # steps between VTK snapshots

    [probes]
    points = [[1.5, 0.5], [3.0, 0.8], [4.5, 0.5]]   # cm
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:          # Python < 3.11
    import tomli as tomllib

from . import units
from .coupling import CouplingConfig
from .fluid import FluidParams
from .geometry import StenosisGeometry
from .materials import CarreauParams, HyperelasticParams, LameParams
from .structure import NewtonParams

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(Exception):
    """A configuration file problem, carrying the offending key path."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


# Conversion factors to the internal unit of each dimension.
_UNITS = {
    "length": {"cm": 1.0, "mm": 0.1, "m": 100.0},
    "time": {"s": 1.0, "ms": 1.0e-3},
    "speed": {"cm/s": 1.0, "mm/s": 0.1, "m/s": 100.0},
    "density": {"g/cm3": 1.0, "kg/m3": 1.0e-3},
    "viscosity": {"P": 1.0, "poise": 1.0, "cP": 0.01,
                  "Pa.s": units.PA_S, "Pa*s": units.PA_S, "mPa.s": 0.01},
    "stress": {"barye": 1.0, "dyn/cm2": 1.0, "Pa": units.PA,
               "kPa": 1.0e3 * units.PA, "MPa": units.MPA,
               "N/cm2": units.N_PER_CM2},
    "-": {"": 1.0},
}

# key path -> (dimension, default unit of bare numbers, internal factor
# applied after conversion to that dimension's base).  The detection
# thresholds stay in the units their consumers take (Pa.s, cm/s).
_SCHEMA = {
    "geometry.length": ("length", "cm"),
    "geometry.lumen_height": ("length", "cm"),
    "geometry.wall_thickness": ("length", "cm"),
    "geometry.occlusion": ("-", ""),
    "geometry.bump_center": ("length", "cm"),
    "geometry.bump_half_width": ("length", "cm"),
    "geometry.mesh_size": ("length", "cm"),
    "fluid.density": ("density", "g/cm3"),
    "fluid.epsilon": ("-", ""),
    "fluid.dt": ("time", "s"),
    "fluid.inlet_amplitude": ("speed", "cm/s"),
    "fluid.waveform": ("str", ""),
    "viscosity.relaxation": ("time", "s"),
    "viscosity.exponent": ("-", ""),
    "viscosity.mu0": ("viscosity", "P"),
    "viscosity.mu_inf": ("viscosity", "P"),
    "viscosity.history": ("bool", ""),
    "wall.c0": ("stress", "N/cm2"),
    "wall.c1": ("stress", "N/cm2"),
    "wall.c2": ("stress", "N/cm2"),
    "newton.tol": ("-", ""),
    "newton.max_iter": ("int", ""),
    "clot.youngs_modulus": ("stress", "MPa"),
    "clot.poisson": ("-", ""),
    "detection.mu_threshold": ("viscosity", "Pa.s"),
    "detection.v_threshold": ("speed", "cm/s"),
    "detection.time": ("time", "s"),
    "rupture.t_end": ("time", "s"),
    "output.directory": ("str", ""),
    "output.vtk_every": ("int", ""),
    "probes.points": ("points", ""),
}


def _convert(key: str, raw, dim: str, default_unit: str) -> float:
    """A bare number is in ``default_unit``; a "value unit" string converts."""
    table = _UNITS[dim]
    if isinstance(raw, str):
        parts = raw.split()
        if len(parts) != 2:
            raise ConfigError(key, f"expected 'VALUE UNIT', got {raw!r}")
        try:
            value = float(parts[0])
        except ValueError:
            raise ConfigError(key, f"non-numeric value in {raw!r}") from None
        unit = parts[1]
        if unit not in table:
            raise ConfigError(
                key, f"unit {unit!r} is not a {dim} unit "
                     f"(expected one of {sorted(table)})")
        base = value * table[unit]
    elif isinstance(raw, bool):
        raise ConfigError(key, "expected a number, got a boolean")
    elif isinstance(raw, (int, float)):
        base = float(raw) * table[default_unit]
    else:
        raise ConfigError(key, f"expected a number or 'VALUE UNIT' string, "
                               f"got {type(raw).__name__}")
    return base


def _typed(key: str, raw, kind: str):
    if kind == "str":
        if not isinstance(raw, str):
            raise ConfigError(key, f"expected a string, got {type(raw).__name__}")
        return raw
    if kind == "bool":
        if not isinstance(raw, bool):
            raise ConfigError(key, f"expected true/false, got {type(raw).__name__}")
        return raw
    if kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(key, f"expected an integer, got {raw!r}")
        return raw
    if kind == "points":
        try:
            pts = np.asarray(raw, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(key, "expected a list of [x, y] pairs") from None
        if pts.size == 0:
            return np.empty((0, 2))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError(key, f"expected a list of [x, y] pairs, "
                                   f"got shape {pts.shape}")
        return pts
    raise AssertionError(kind)


@dataclass(frozen=True)
class RunConfig:
    """Validated, unit-converted parameters of a full pipeline run."""

    geometry: StenosisGeometry = dc_field(default_factory=StenosisGeometry)
    fluid: FluidParams = dc_field(default_factory=FluidParams)
    carreau: CarreauParams = dc_field(default_factory=CarreauParams)
    wall: HyperelasticParams = dc_field(default_factory=HyperelasticParams)
    newton: NewtonParams = dc_field(default_factory=NewtonParams)
    clot: LameParams = dc_field(default_factory=lambda: LameParams(
        youngs_modulus=14.5 * units.MPA, poisson=0.492))
    history_viscosity: bool = True
    mu_threshold: float = 0.04       # Pa.s
    v_threshold: float = 0.1         # cm/s
    detection_time: float = 3.0      # s
    t_end: float = 4.0               # s
    probe_points: np.ndarray = dc_field(
        default_factory=lambda: np.empty((0, 2)))
    output_dir: str = "out"
    vtk_every: int = 5

    def __post_init__(self):
        if self.mu_threshold <= 0:
            raise ConfigError("detection.mu_threshold", "must be positive")
        if self.v_threshold <= 0:
            raise ConfigError("detection.v_threshold", "must be positive")
        if self.detection_time <= 0:
            raise ConfigError("detection.time", "must be positive")
        # A t_end before the detection time is allowed (short smoke runs):
        # the pipeline then skips detection with a warning.
        if self.t_end <= 0:
            raise ConfigError("rupture.t_end", "must be positive")
        if self.vtk_every < 1:
            raise ConfigError("output.vtk_every", "must be at least 1")

    def coupling(self) -> CouplingConfig:
        return CouplingConfig(fluid=self.fluid, material=self.wall,
                              newton=self.newton, carreau=self.carreau,
                              history_viscosity=self.history_viscosity)


def _get(values: dict, table: str, name: str, fallback):
    """Converted config value or ``fallback`` when the key is absent."""
    key = f"{table}.{name}"
    if key not in values:
        return fallback
    return values[key]


def _build(key: str, factory, **kwargs):
    """Construct a parameter dataclass, re-raising with the key path."""
    try:
        return factory(**kwargs)
    except (ConfigError, TypeError):
        raise
    except Exception as exc:
        raise ConfigError(key, str(exc)) from exc


def load_config(path: str | Path | None = None) -> RunConfig:
    """Parse and validate a TOML run configuration.

    ``None`` or an empty file yields the full default parameter set.
    Raises ConfigError for unknown keys, unit mismatches, and invariant
    violations, naming the offending key path.
    """
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"invalid TOML: {exc}") from exc

    values: dict = {}
    for tname, tval in raw.items():
        if not isinstance(tval, dict):
            raise ConfigError(tname, "top-level keys must be tables")
        for kname, kval in tval.items():
            key = f"{tname}.{kname}"
            if key not in _SCHEMA:
                raise ConfigError(key, "unknown key")
            dim, default_unit = _SCHEMA[key]
            if dim in ("str", "bool", "int", "points"):
                values[key] = _typed(key, kval, dim)
            else:
                values[key] = _convert(key, kval, dim, default_unit)

    geometry = _build(
        "geometry", StenosisGeometry,
        length=_get(values, "geometry", "length", 6.0),
        lumen_height=_get(values, "geometry", "lumen_height", 1.0),
        wall_thickness=_get(values, "geometry", "wall_thickness", 0.1),
        occlusion=_get(values, "geometry", "occlusion", 0.4),
        bump_center=_get(values, "geometry", "bump_center", None),
        bump_half_width=_get(values, "geometry", "bump_half_width", 0.75),
        mesh_size=_get(values, "geometry", "mesh_size", 0.1),
    )
    fluid = _build(
        "fluid", FluidParams,
        rho_f=_get(values, "fluid", "density", 1.056),
        epsilon=_get(values, "fluid", "epsilon", 1.0e-6),
        dt=_get(values, "fluid", "dt", 0.01),
        inlet_amplitude=_get(values, "fluid", "inlet_amplitude", 5.0),
        waveform=_get(values, "fluid", "waveform", "continuous"),
    )
    carreau = _build(
        "viscosity", CarreauParams,
        mu0=_get(values, "viscosity", "mu0", 0.56),
        mu_inf=_get(values, "viscosity", "mu_inf", 0.0345),
        relaxation=_get(values, "viscosity", "relaxation", 3.313),
        exponent=_get(values, "viscosity", "exponent", 0.3568),
    )
    wall = _build(
        "wall", HyperelasticParams,
        c0=_get(values, "wall", "c0", 110.0 * units.N_PER_CM2),
        c1=_get(values, "wall", "c1", 100.0 * units.N_PER_CM2),
        c2=_get(values, "wall", "c2", 110.0 * units.N_PER_CM2),
    )
    newton = _build(
        "newton", NewtonParams,
        tol=_get(values, "newton", "tol", 1.0e-8),
        max_iter=_get(values, "newton", "max_iter", 20),
    )
    clot = _build(
        "clot", LameParams,
        youngs_modulus=_get(values, "clot", "youngs_modulus",
                            14.5 * units.MPA),
        poisson=_get(values, "clot", "poisson", 0.492),
    )

    mu_th = _get(values, "detection", "mu_threshold", 0.04 * units.PA_S)
    return RunConfig(
        geometry=geometry,
        fluid=fluid,
        carreau=carreau,
        wall=wall,
        newton=newton,
        clot=clot,
        history_viscosity=_get(values, "viscosity", "history", True),
        # the threshold travels in Pa.s (the unit detect_regions documents)
        mu_threshold=mu_th / units.PA_S,
        v_threshold=_get(values, "detection", "v_threshold", 0.1),
        detection_time=_get(values, "detection", "time", 3.0),
        t_end=_get(values, "rupture", "t_end", 4.0),
        probe_points=_get(values, "probes", "points", np.empty((0, 2))),
        output_dir=_get(values, "output", "directory", "out"),
        vtk_every=_get(values, "output", "vtk_every", 5),
    )
