import json

import numpy as np
import pytest

import nonlocalwave as nlw
from nonlocalwave import cli


def run(tmp_path, name, **kw):
    out = tmp_path / name
    rc = cli.run(cli.RunConfig(out=str(out), **kw))
    manifest = json.loads((out / "manifest.json").read_text())
    return rc, out, manifest


def test_parse_args_round_trip():
    cfg = cli.parse_args(["solve", "--scenario", "population", "--m", "8",
                          "--h", "0.001", "--seed", "3", "--dump-fs",
                          "--out", "somewhere"])
    assert cfg.command == "solve" and cfg.scenario == "population"
    assert cfg.m == "8" and cfg.h == 0.001 and cfg.seed == 3
    assert cfg.dump_fs and cfg.out == "somewhere"


def test_solve_default_scenario(tmp_path):
    rc, out, manifest = run(tmp_path, "solve", command="solve",
                            scenario="undamped_neumann")
    assert rc == 0 and manifest["exit_code"] == 0
    assert manifest["report"]["residual_ic_u"] < 1e-5
    assert manifest["report"]["residual_ic_v"] < 1e-5
    assert (out / "solution.csv").exists() and (out / "report.json").exists()
    header = (out / "solution.csv").read_text().splitlines()
    assert any(line.startswith("# m=") for line in header)


def test_solve_determinism(tmp_path):
    rc1, out1, _ = run(tmp_path, "a", command="solve", scenario="population",
                       m="8", seed=5, dump_fs=True)
    rc2, out2, _ = run(tmp_path, "b", command="solve", scenario="population",
                       m="8", seed=5, dump_fs=True)
    assert rc1 == rc2 == 0
    for name in ("solution.csv", "report.json", "manifest.json", "fs.bin"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_certify_command(tmp_path):
    rc, out, manifest = run(tmp_path, "cert", command="certify",
                            scenario="undamped_neumann", m="8")
    assert rc == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["coercivity_alpha"] >= 1.0 - 1e-10
    assert cert["kernel_g"][0] == pytest.approx(0.5)


def test_certify_violated_bound_exits_2(tmp_path):
    cfg_file = tmp_path / "bad.cfg"
    sc = nlw.scenario_undamped_neumann()
    import dataclasses
    bad = dataclasses.replace(sc, gradient_coef="t - 0.5",
                              bounds=(("a", 0.0, None),), m=4)
    nlw.save_scenario(bad, cfg_file)
    rc, out, manifest = run(tmp_path, "badrun", command="certify",
                            config=str(cfg_file))
    assert rc == 2 and manifest["exit_code"] == 2
    assert manifest["witness"]["time"] is not None
    assert manifest["witness"]["point"] is not None


def test_axioms_command(tmp_path):
    rc, out, manifest = run(tmp_path, "ax", command="axioms",
                            scenario="undamped_neumann", m="8")
    assert rc == 0
    rep = json.loads((out / "axioms.json").read_text())
    assert rep["s1_defect"] <= 1e-12
    assert rep["adjoint_defect"] < 1e-6


def test_converge_command(tmp_path):
    rc, out, manifest = run(tmp_path, "conv", command="converge",
                            scenario="population", m="4,8,16")
    assert rc == 0
    lines = [l for l in (out / "convergence.csv").read_text().splitlines()
             if l and not l.startswith("#")]
    assert lines[0].split(",")[0] == "m"
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 3
    diffs = [float(r[2]) for r in rows]
    assert diffs[0] >= diffs[1] >= diffs[2]
    assert manifest["convergence"]["nonincreasing"]


def test_converge_needs_m_list(tmp_path):
    rc, _, manifest = run(tmp_path, "convbad", command="converge",
                          scenario="population")
    assert rc == 1 and "error" in manifest


def test_manufactured_command(tmp_path):
    rc, out, manifest = run(tmp_path, "mfg", command="manufactured",
                            scenario="manufactured_coscos", m="8")
    assert rc == 0
    assert manifest["manufactured_error"]["sup_coefficient"] < 1e-5


def test_manufactured_command_requires_u_star(tmp_path):
    rc, _, manifest = run(tmp_path, "mfgbad", command="manufactured",
                          scenario="population")
    assert rc == 1


def test_unknown_scenario_exits_1(tmp_path):
    rc, _, manifest = run(tmp_path, "unk", command="solve", scenario="nope")
    assert rc == 1 and "unknown scenario" in manifest["error"]


def test_overrides_validated(tmp_path):
    rc, _, _ = run(tmp_path, "hm", command="solve",
                   scenario="undamped_neumann", m="1000")
    assert rc == 1
    rc, _, _ = run(tmp_path, "hh", command="solve",
                   scenario="undamped_neumann", h=1e-9)
    assert rc == 1


def test_config_file_drives_solve(tmp_path):
    cfg_file = tmp_path / "toy.cfg"
    import dataclasses
    sc = dataclasses.replace(nlw.scenario_undamped_neumann(), m=4,
                             name="tiny")
    nlw.save_scenario(sc, cfg_file)
    rc, out, manifest = run(tmp_path, "cfgd", command="solve",
                            config=str(cfg_file))
    assert rc == 0 and manifest["scenario"] == "tiny"
    assert manifest["resolved"]["m"] == 4


def test_dump_fs_round_trips(tmp_path):
    rc, out, _ = run(tmp_path, "dump", command="solve",
                     scenario="undamped_neumann", m="4", dump_fs=True)
    assert rc == 0
    fs = nlw.load_fs(out / "fs.bin")
    assert fs.m == 4 and fs.kind == "undamped"
    assert fs.n_nodes == fs.time_grid.size
