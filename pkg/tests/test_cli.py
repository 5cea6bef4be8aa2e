import json

import numpy as np
import pytest

from nematic_ldg import cli, io, field as fld, qtensor as qt, solve
from nematic_ldg.bulk import MaterialParams
from nematic_ldg.field import Grid3, QField

HEDGEHOG_CFG = """\
# hedgehog sweep used in the README
[run]
mode = sweep
out = results
format = vtk

[domain]
n = 24
scenario = hedgehog

[material]
a2 = 1.0
b2 = 1.0
c2 = 1.0

[sweep]
L_max = 0.1
L_ratio = 0.5
L_count = 8
margin = 0.25
lam = 0.5
warm_start = true

[solver]
max_iters = 50000
tol_residual = auto
"""


def test_minimal_config_fills_defaults():
    cfg = io.parse_config("[domain]\nn = 16\nscenario = constant\n")
    assert cfg.sweep.n == 16 and cfg.sweep.scenario == "constant"
    assert cfg.sweep.a2 == 1.0 and len(cfg.sweep.L_sequence) == 8
    assert cfg.sweep.solver == solve.SolverOptions()
    assert cfg.mode == "sweep"


def test_range_error_names_key_and_line():
    with pytest.raises(io.ConfigError) as info:
        io.parse_config("[material]\n\na2 = -1\n")
    assert info.value.line == 3
    assert "a2" in str(info.value)


@pytest.mark.parametrize("text, line", [
    ("[material]\nfoo = 1\n", 2),
    ("[nope]\nx = 1\n", 1),
    ("[domain]\nn = many\n", 2),
    ("[sweep]\nL_sequence = 0.1, 0.2\n", 2),
    ("[sweep]\nwarm_start = maybe\n", 2),
    ("[run]\nformat = png\n", 2),
    ("[domain]\nn = 4\nn = 5\n", 3),
    ("n = 4\n", 1),
])
def test_config_errors_carry_lines(text, line):
    with pytest.raises(io.ConfigError) as info:
        io.parse_config(text)
    assert info.value.line == line


def test_config_round_trip():
    cfg = io.parse_config(HEDGEHOG_CFG)
    text = io.serialize_config(cfg)
    again = io.parse_config(text)
    assert again == cfg
    assert io.serialize_config(again) == text


def test_config_round_trip_explicit_sequence():
    cfg = io.parse_config("[sweep]\nL_sequence = 0.3, 0.1, 0.0123456789012345\n"
                          "[solver]\ntol_residual = 1e-9\nseed = 7\n")
    assert io.parse_config(io.serialize_config(cfg)) == cfg


def small_field(p):
    g = Grid3.unit_box(5)
    f = solve.initial_q_field(g, fld.scenario_director("hedgehog", g), p)
    f.values[2, 2, 2] = [0.1, -0.2, 0.3, 0.05, -0.4]
    return f


def test_csv_round_trip_is_byte_identical(tmp_path):
    p = MaterialParams(0.7, 1.3, 0.9, L=0.0123)
    f = small_field(p)
    a = tmp_path / "a.csv"
    io.export_field(f, p, a, "csv")
    g, p2 = io.import_field_csv(a)
    assert p2 == p
    np.testing.assert_array_equal(g.values, f.values)
    b = tmp_path / "b.csv"
    io.export_field(g, p2, b, "csv")
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[1].split(",") == list(io.CSV_COLUMNS)
    assert len(lines) == 2 + 125
    assert all(len(row.split(",")) == 18 for row in lines[2:])


def test_csv_constant_field(tmp_path):
    p = MaterialParams(1, 1, 1)
    g = Grid3.unit_box(4)
    f = QField(g, np.broadcast_to(qt.from_uniaxial(1.5, [0, 0, 1.0]), g.dims + (5,)).copy())
    path = tmp_path / "c.csv"
    io.export_field(f, p, path, "csv")
    rows = [r.split(",") for r in path.read_text().splitlines()[2:]]
    assert len({tuple(r[6:]) for r in rows}) == 1
    assert all(float(r[13]) == 0.0 for r in rows)


def parse_vtk(path):
    """Header-level structural validator for legacy ASCII structured points."""
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# vtk DataFile Version")
    assert len(lines[1]) <= 256
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET STRUCTURED_POINTS"
    dims = tuple(int(v) for v in lines[4].split()[1:])
    assert lines[4].startswith("DIMENSIONS") and len(dims) == 3
    assert lines[5].startswith("ORIGIN") and len(lines[5].split()) == 4
    assert lines[6].startswith("SPACING") and len(lines[6].split()) == 4
    npts = int(lines[7].split()[1])
    assert lines[7].startswith("POINT_DATA") and npts == np.prod(dims)
    arrays, i = {}, 8
    while i < len(lines):
        head = lines[i].split()
        if head[0] == "SCALARS":
            assert lines[i + 1] == "LOOKUP_TABLE default"
            data = [float(v) for v in lines[i + 2:i + 2 + npts]]
            arrays[head[1]] = np.array(data)
            i += 2 + npts
        elif head[0] == "VECTORS":
            data = [[float(v) for v in row.split()] for row in lines[i + 1:i + 1 + npts]]
            assert all(len(r) == 3 for r in data)
            arrays[head[1]] = np.array(data)
            i += 1 + npts
        else:
            raise AssertionError(f"unexpected line {lines[i]!r}")
    return dims, arrays


def test_vtk_structure(tmp_path):
    p = MaterialParams(1, 1, 1, L=0.1)
    f = small_field(p)
    path = tmp_path / "f.vtk"
    io.export_field(f, p, path, "vtk")
    dims, arrays = parse_vtk(path)
    assert dims == (5, 5, 5)
    assert set(arrays) == {"S", "R", "beta", "ftilde", "Qnorm", "director"}
    # x runs fastest
    qn = arrays["Qnorm"].reshape(5, 5, 5).transpose(2, 1, 0)
    np.testing.assert_allclose(qn, f.norms(), rtol=1e-15)


def test_export_to_missing_directory(tmp_path):
    p = MaterialParams(1, 1, 1)
    with pytest.raises(OSError):
        io.export_field(small_field(p), p, tmp_path / "missing" / "f.csv", "csv")


def write_cfg(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


def test_cli_solve_constant(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[run]\nmode = solve\nformat = csv\ninit = zero\n"
                              "[domain]\nn = 10\nscenario = constant\n[sweep]\nmargin = 0.3\n")
    out = tmp_path / "out"
    assert cli.run(["solve", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["report"]["final_energy"] < 1e-8
    assert doc["schema_version"] == 1
    assert set(doc["provenance"]) >= {"config_hash", "version"}
    assert (out / "field.csv").exists()

    assert cli.run(["analyze", "--input", str(out / "field.csv"), "--out", str(out)]) == 0
    ana = json.loads((out / "analysis.json").read_text())
    assert ana["diagnostics"]["total_energy"] < 1e-8
    assert "input_sha256" in ana["provenance"]

    assert cli.run(["export", "--input", str(out / "field.csv"), "--format", "vtk",
                    "--out", str(out)]) == 0
    parse_vtk(out / "field.vtk")


def test_cli_sweep(tmp_path):
    cfg = write_cfg(tmp_path, "[domain]\nn = 10\nscenario = hedgehog\n"
                              "[sweep]\nL_sequence = 0.02, 0.01\nmargin = 0.25\n")
    out = tmp_path / "res"
    assert cli.run(["sweep", "--config", cfg, "--out", str(out), "--threads", "2"]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert len(doc["records"]) == 2
    assert doc["field_files"] == ["field_L0.vtk", "field_L1.vtk"]
    assert doc["provenance"]["config_hash"]
    for name in doc["field_files"]:
        parse_vtk(out / name)


def test_cli_errors(tmp_path, capsys):
    assert cli.run(["solve", "--bogus"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "usage"
    assert cli.run([]) == 2
    capsys.readouterr()
    bad = write_cfg(tmp_path, "[material]\na2 = -1\n")
    assert cli.run(["solve", "--config", bad]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and "line 2" in err["message"]
    assert cli.run(["solve", "--config", str(tmp_path / "none.cfg")]) == 4
    assert json.loads(capsys.readouterr().err)["error"] == "io"
    assert cli.run(["analyze", "--input", str(tmp_path / "none.csv")]) == 4
    capsys.readouterr()
    cfg = write_cfg(tmp_path, "[run]\nmode = solve\nformat = none\n[domain]\nn = 8\n"
                              "[sweep]\nmargin = 0.3\n[solver]\nmax_iters = 2\n")
    assert cli.run(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 5
    assert json.loads(capsys.readouterr().err)["error"] == "solver-failure"


def test_seed_flag_reaches_solver(tmp_path):
    cfg = write_cfg(tmp_path, "[run]\nmode = solve\nformat = none\ninit = random\n"
                              "[domain]\nn = 6\nscenario = constant\n[sweep]\nmargin = 0.4\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(["solve", "--config", cfg, "--out", str(a), "--seed", "4"]) == 0
    assert cli.run(["solve", "--config", cfg, "--out", str(b), "--seed", "4"]) == 0
    ra = json.loads((a / "report.json").read_text())
    rb = json.loads((b / "report.json").read_text())
    assert ra["report"] == rb["report"]
    assert "seed = 4" in ra["provenance"]["config"]
