import json
import subprocess
import sys

import numpy as np
import pytest

from corpus import MERGED_FORCES, SPRING_SRC
from relsim import types as T
from relsim.cli import main
from relsim.io import read_field_file
from relsim.sim.spring_mass import kernel_source

SMALL = ["--steps", "20"]


@pytest.fixture
def kfile(tmp_path):
    def write(text, name="k.ebb"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def test_check_spring_kernels(kfile, capsys):
    assert main(["check", kfile(SPRING_SRC), "spring-mass"]) == 0
    out = capsys.readouterr().out
    assert "kernel computeInternalForces(v : vertices)" in out
    block = out.split("computeInternalForces", 1)[1].split("kernel", 1)[0]
    assert "force: Reduce(+)" in block and "q: ReadOnly" in block
    assert "E: Reduce(+)" in out


def test_check_reports_phase_conflict(kfile, capsys):
    path = kfile(MERGED_FORCES)
    assert main(["check", path, "spring-mass"]) == 1
    err = capsys.readouterr().err.splitlines()
    force = [l for l in err if "vertices.force" in l]
    assert force and force[0].startswith(f"{path}:6:5: phase-error:")


def test_check_json_and_type_errors(kfile, capsys):
    src = SPRING_SRC + "\nkernel bad(e : dragon.edges)\n  var x = e.head + 1\nend\n"
    assert main(["check", kfile(src), "spring-mass", "--json"]) == 1
    rep = json.loads(capsys.readouterr().out)
    assert [k["name"] for k in rep["kernels"]][:4] == ["initLen", "computeInternalForces",
                                                       "applyForces", "measureTotalEnergy"]
    (e,) = rep["errors"]
    assert e["kind"] == "type-error" and e["span"][0] == len(src.splitlines()) - 1


def test_check_fluids_schema(capsys, kfile):
    assert main(["check", kfile(kernel_source("fluids.ebb")), "fluids-lite"]) == 0
    out = capsys.readouterr().out
    assert "cells.vel" in out and "particles.vel" in out


@pytest.mark.parametrize("argv", [
    ["check", "/nonexistent.ebb", "spring-mass"],
    ["spring-mass", "--config", "/nonexistent.cfg"],
    ["spring-mass", "--workers", "0"],
    ["frobnicate"],
    ["spring-mass", "--steps", "many"],
])
def test_user_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as info:
        sys.exit(main(argv))
    assert info.value.code == 1


def test_syntax_error_location(kfile, capsys):
    path = kfile("kernel k(v : vertices)\n  v.mass = = 1\nend\n")
    assert main(["check", path, "spring-mass"]) == 1
    assert capsys.readouterr().err.startswith(f"{path}:2:")


def test_custom_schema(tmp_path, kfile, capsys):
    schema = {
        "domains": [{"kind": "graph"}],
        "fields": [{"relation": "vertices", "name": "w", "type": "float64"}],
    }
    sp = tmp_path / "s.json"
    sp.write_text(json.dumps(schema))
    assert main(["check", kfile("kernel k(v : vertices)\n v.w = v.pos[0]\nend"), str(sp)]) == 0
    sp.write_text("{ not json")
    assert main(["check", kfile("kernel k(v : vertices) end"), str(sp)]) == 1
    assert "s.json" in capsys.readouterr().err


def test_spring_mass_run_and_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["spring-mass", *SMALL, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("step 0: E = ")
    assert (out / "energy.csv").exists() and (out / "q.raw").exists()


def test_show_config(capsys):
    assert main(["fluids-lite", "--show-config"]) == 0
    assert "pressure_iters = 50" in capsys.readouterr().out


def test_nan_fault_exits_2(tmp_path, capsys):
    masses = tmp_path / "m.csv"
    masses.write_text("1.0\n0.0\n")
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"mesh = chain\nstretch = 0.1\nmass_file = {masses}\n")
    assert main(["spring-mass", "--config", str(cfg), "--strict-nan", "--steps", "2"]) == 2
    assert "nan" in capsys.readouterr().err.lower()
    assert main(["spring-mass", "--config", str(cfg), "--steps", "2"]) == 0


def test_dump_csv_and_raw(tmp_path, capsys):
    csv = tmp_path / "q.csv"
    assert main(["dump", "vertices", "q", str(csv), *SMALL]) == 0
    rows = csv.read_text().splitlines()
    assert len(rows) == 64 and all(len(r.split(",")) == 3 for r in rows)
    raw = tmp_path / "q.bin"
    assert main(["dump", "vertices", "q", str(raw), *SMALL]) == 0
    a = read_field_file(raw, T.vector("float64", 3), 64)
    b = read_field_file(csv, T.vector("float64", 3), 64)
    assert np.array_equal(a, b)
    assert main(["dump", "cells", "vel", str(tmp_path / "v.csv"), "--sim", "fluids-lite",
                 "--steps", "2"]) == 0
    assert len((tmp_path / "v.csv").read_text().splitlines()) == 64 * 64


def test_dump_unknown_field_or_relation(tmp_path, capsys):
    assert main(["dump", "vertices", "nope", str(tmp_path / "x.csv"), *SMALL]) == 1
    assert "no field 'nope'" in capsys.readouterr().err
    assert main(["dump", "faces", "q", str(tmp_path / "x.csv"), *SMALL]) == 1


@pytest.mark.parametrize("sim, files", [("spring-mass", ["energy.csv", "q.raw", "qd.raw"]),
                                        ("fluids-lite", ["vel.raw", "particles.csv"])])
def test_deterministic_outputs_match_across_workers(tmp_path, sim, files):
    outs = []
    for workers in ("1", "4", "4"):
        d = tmp_path / f"{workers}-{len(outs)}"
        extra = ["--steps", "30"] if sim == "spring-mass" else ["--steps", "3"]
        assert main([sim, *extra, "--deterministic", "--workers", workers, "--out", str(d)]) == 0
        outs.append(d)
    for f in files:
        blobs = {(d / f).read_bytes() for d in outs}
        assert len(blobs) == 1, f


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "relsim.cli", "check", "/nonexistent", "spring-mass"],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "cannot read kernel file" in r.stderr
