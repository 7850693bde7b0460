"""Tests for TOML run configuration (units, defaults, errors) and the VTK/CSV
serialization round trips."""

import numpy as np
import pytest

from stenofsi import units
from stenofsi.config import ConfigError, RunConfig, load_config
from stenofsi.coupling import CouplingConfig
from stenofsi.geometry import rectangle_mesh
from stenofsi.io import CsvLog, read_csv, read_vtk_points, write_csv, write_vtk


def _write(tmp_path, text):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def test_defaults_without_file():
    cfg = load_config(None)
    assert cfg.geometry.length == 6.0
    assert cfg.geometry.occlusion == 0.4
    assert cfg.fluid.inlet_amplitude == 5.0
    assert cfg.fluid.dt == 0.01
    assert cfg.carreau.mu0 == 0.56            # poise
    assert cfg.carreau.mu_inf == 0.0345
    assert cfg.wall.c1 == 100.0 * units.N_PER_CM2
    assert cfg.clot.youngs_modulus == 14.5 * units.MPA
    assert cfg.clot.poisson == 0.492
    assert cfg.mu_threshold == 0.04           # Pa.s
    assert cfg.v_threshold == 0.1
    assert cfg.detection_time == 3.0
    assert cfg.t_end == 4.0
    assert cfg.vtk_every == 5
    assert cfg.probe_points.shape == (0, 2)


def test_empty_file_equals_defaults(tmp_path):
    path = _write(tmp_path, "")
    cfg, ref = load_config(path), load_config(None)
    assert cfg.geometry == ref.geometry
    assert cfg.fluid == ref.fluid
    assert cfg.carreau == ref.carreau
    assert cfg.wall == ref.wall
    assert cfg.clot == ref.clot
    assert cfg.mu_threshold == ref.mu_threshold


def test_unit_strings_convert(tmp_path):
    path = _write(tmp_path, """
[geometry]
length = "60 mm"

[fluid]
inlet_amplitude = "0.05 m/s"
dt = "10 ms"

[viscosity]
mu0 = "0.056 Pa.s"
mu_inf = "3.45 cP"

[wall]
c1 = "1.0 MPa"

[clot]
youngs_modulus = "14500 kPa"

[detection]
mu_threshold = "0.4 P"
""")
    cfg = load_config(path)
    assert abs(cfg.geometry.length - 6.0) < 1e-12
    assert abs(cfg.fluid.inlet_amplitude - 5.0) < 1e-12
    assert abs(cfg.fluid.dt - 0.01) < 1e-12
    assert abs(cfg.carreau.mu0 - 0.56) < 1e-12
    assert abs(cfg.carreau.mu_inf - 0.0345) < 1e-12
    assert abs(cfg.wall.c1 - 1.0e7) < 1e-4
    assert abs(cfg.clot.youngs_modulus - 1.45e8) < 1e-3
    assert abs(cfg.mu_threshold - 0.04) < 1e-12


def test_bare_numbers_use_documented_units(tmp_path):
    path = _write(tmp_path, """
[viscosity]
mu0 = 0.5

[clot]
youngs_modulus = 2.0

[wall]
c2 = 120.0
""")
    cfg = load_config(path)
    assert cfg.carreau.mu0 == 0.5                        # poise
    assert cfg.clot.youngs_modulus == 2.0 * units.MPA
    assert cfg.wall.c2 == 120.0 * units.N_PER_CM2


def test_probes_and_waveform(tmp_path):
    path = _write(tmp_path, """
[fluid]
waveform = "gated"

[probes]
points = [[1.0, 0.5], [3.0, 0.25]]
""")
    cfg = load_config(path)
    assert cfg.fluid.waveform == "gated"
    np.testing.assert_allclose(cfg.probe_points,
                               [[1.0, 0.5], [3.0, 0.25]])


@pytest.mark.parametrize("body,needle", [
    ("[geometry]\nwibble = 3", "unknown key"),
    ("top = 3", "tables"),
    ('[viscosity]\nmu0 = "0.056 kg"', "not a viscosity unit"),
    ('[viscosity]\nmu0 = "fast"', "VALUE UNIT"),
    ("[fluid]\ndt = true", "boolean"),
    ("[fluid]\nwaveform = 5", "expected a string"),
    ("[output]\nvtk_every = 2.5", "integer"),
    ("[output]\nvtk_every = 0", "at least 1"),
    ("[probes]\npoints = [[1.0, 2.0, 3.0]]", "pairs"),
    ("[detection]\nmu_threshold = -0.1", "positive"),
    ("[newton]\ntol = -1e-8", "tol"),
])
def test_config_errors_name_the_key(tmp_path, body, needle):
    path = _write(tmp_path, body)
    with pytest.raises(ConfigError, match=needle):
        load_config(path)


def test_invalid_toml_and_missing_file(tmp_path):
    path = _write(tmp_path, "[geometry\nlength = 3")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(path)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.toml")


def test_coupling_bundle_wires_through(tmp_path):
    path = _write(tmp_path, """
[fluid]
inlet_amplitude = 2.0

[viscosity]
history = false

[newton]
max_iter = 7
""")
    cfg = load_config(path)
    cc = cfg.coupling()
    assert isinstance(cc, CouplingConfig)
    assert cc.fluid.inlet_amplitude == 2.0
    assert cc.newton.max_iter == 7
    assert cc.history_viscosity is False


def test_runconfig_validates_thresholds():
    with pytest.raises(ConfigError, match="v_threshold"):
        RunConfig(v_threshold=0.0)
    with pytest.raises(ConfigError, match="time"):
        RunConfig(detection_time=-1.0)


# ---------------------------------------------------------------------------
# VTK
# ---------------------------------------------------------------------------


def test_vtk_point_roundtrip_is_exact(tmp_path, rng):
    mesh = rectangle_mesh(3, 2, width=1.7, height=0.3, origin=(-0.1, 0.4))
    jitter = mesh.vertices + 1e-3 * rng.normal(size=mesh.vertices.shape)
    mesh = mesh.with_vertices(jitter)
    path = tmp_path / "mesh.vtk"
    write_vtk(path, mesh)
    pts = read_vtk_points(path)
    assert np.array_equal(pts, mesh.vertices)   # bit-exact via repr


def test_vtk_field_blocks(tmp_path):
    mesh = rectangle_mesh(2, 2)
    nv, nt = mesh.n_vertices, mesh.n_triangles
    path = tmp_path / "fields.vtk"
    write_vtk(path, mesh,
              point_data={"speed": np.arange(nv, dtype=float),
                          "velocity": np.ones((nv, 2))},
              cell_data={"viscosity": np.full(nt, 0.25)})
    text = path.read_text()
    assert f"POINT_DATA {nv}" in text
    assert "SCALARS speed double 1" in text
    assert "VECTORS velocity double" in text
    assert f"CELL_DATA {nt}" in text
    assert "SCALARS viscosity double 1" in text
    assert text.count("CELL_TYPES") == 1
    # every triangle is VTK type 5
    tail = text.split("CELL_TYPES")[1].splitlines()[1:nt + 1]
    assert all(line == "5" for line in tail)


def test_vtk_rejects_bad_fields(tmp_path):
    mesh = rectangle_mesh(2, 2)
    with pytest.raises(ValueError, match="values"):
        write_vtk(tmp_path / "x.vtk", mesh,
                  point_data={"bad": np.zeros(3)})
    with pytest.raises(ValueError, match="shape"):
        write_vtk(tmp_path / "y.vtk", mesh,
                  point_data={"bad": np.zeros((mesh.n_vertices, 3))})


def test_vtk_without_points_section_rejected(tmp_path):
    path = tmp_path / "junk.vtk"
    path.write_text("# vtk DataFile Version 3.0\nempty\nASCII\n")
    with pytest.raises(ValueError, match="POINTS"):
        read_vtk_points(path)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def test_csv_roundtrip_is_exact(tmp_path, rng):
    header = ["t", "flux_in", "flux_out"]
    rows = rng.normal(size=(17, 3)) * 10.0 ** rng.integers(-8, 8, size=(17, 3))
    path = tmp_path / "series.csv"
    write_csv(path, header, rows)
    got_header, got = read_csv(path)
    assert got_header == header
    assert np.array_equal(got, rows)            # bit-exact via repr


def test_csv_rewrite_is_byte_identical(tmp_path, rng):
    header = ["a", "b"]
    rows = rng.normal(size=(5, 2))
    p1, p2 = tmp_path / "one.csv", tmp_path / "two.csv"
    write_csv(p1, header, rows)
    h, data = read_csv(p1)
    write_csv(p2, h, data)
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_log_flushes_each_row(tmp_path):
    path = tmp_path / "log.csv"
    with CsvLog(path, ["t", "v"]) as log:
        log.write_row([0.0, 1.5])
        # contents visible on disk before close
        header, data = read_csv(path)
        assert header == ["t", "v"]
        np.testing.assert_array_equal(data, [[0.0, 1.5]])
        log.write_row([0.1, 2.5])
        assert log.rows == 2
    header, data = read_csv(path)
    assert data.shape == (2, 2)
