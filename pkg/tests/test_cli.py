import json
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import single_pole_q
from giscatter import cli
from giscatter.direct import SystemKind, scattering_coefficients
from giscatter.potentials import Grid1D, gaussian_pair, read_pair_csv, write_pair_csv, zero_pair

SINGLE_POLE = {"bound_states": [{"lambda": [0, 1], "multiplicity": 1, "norm_constants": [[2, 0]]}]}


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out), out


@pytest.fixture
def single_pole_file(tmp_path):
    path = tmp_path / "single_pole.json"
    path.write_text(json.dumps(SINGLE_POLE))
    return path


def test_reflectionless_single_pole(tmp_path, capsys, single_pole_file):
    out = tmp_path / "out"
    code, summary, _ = run(capsys, "reflectionless", "--triplets", single_pole_file, "--grid", "-20,20,4001",
                           "--out", out)
    assert code == 0
    assert summary["mu"][0] == pytest.approx(2 * np.pi, abs=1e-8) and abs(summary["mu"][1]) < 1e-12
    with open(out / "potentials.csv") as fh:
        p = read_pair_csv(fh, check_decay=False)
    assert np.max(np.abs(p.q.values - single_pole_q(p.grid.x))) < 1e-12
    assert not [f for f in os.listdir(out) if f.endswith(".tmp")]


def test_direct_on_zero_potential_csv(tmp_path, capsys):
    src = tmp_path / "zero.csv"
    with open(src, "w") as fh:
        write_pair_csv(zero_pair(Grid1D(-4, 4, 81)), fh)
    code, summary, _ = run(capsys, "direct", "--potential", "csv", "--input", src, "--lambda-grid", "-4,4,9",
                           "--out", tmp_path / "o")
    assert code == 0
    data = json.loads((tmp_path / "o" / "scattering.json").read_text())
    assert data["T"] == [[1.0, 0.0]] * 9 and data["R"] == [[0.0, 0.0]] * 9
    assert summary["max_abs_R"] == 0.0


def test_direct_output_round_trips(tmp_path, capsys):
    code, _, _ = run(capsys, "direct", "--grid", "-6,6,601", "--lambda-grid", "-3,3,7", "--out", tmp_path)
    assert code == 0
    back = cli.scattering_from_json(json.loads((tmp_path / "scattering.json").read_text()))
    ref = scattering_coefficients(SystemKind.GI, gaussian_pair(Grid1D(-6, 6, 601), amplitude=0.3),
                                  np.linspace(-3, 3, 7))
    for name in ("T", "Tbar", "R", "Rbar", "L", "Lbar", "R_over_zeta", "Rbar_over_zeta"):
        assert np.array_equal(getattr(back, name), getattr(ref, name))


def test_roundtrip_and_marchenko(tmp_path, capsys):
    code, summary, _ = run(capsys, "roundtrip", "--anchors", "-4,4,41", "--nodes-h", "0.1", "--rule", "gregory",
                           "--out", tmp_path / "rt")
    assert code == 0 and summary["max_relative_error"] < 1e-3
    code, summary, _ = run(capsys, "marchenko", "--scattering", tmp_path / "rt" / "scattering.json",
                           "--anchors", "-1,1,5", "--nodes-h", "0.1", "--rule", "gregory", "--out", tmp_path / "m")
    assert code == 0 and summary["diagonal_identity"] < 1e-6


def test_marchenko_from_triplets_only(tmp_path, capsys, single_pole_file):
    code, _, _ = run(capsys, "marchenko", "--triplets", single_pole_file, "--anchors", "-1,1,5",
                     "--nodes-h", "0.05", "--rule", "gregory", "--out", tmp_path)
    assert code == 0
    with open(tmp_path / "potentials.csv") as fh:
        p = read_pair_csv(fh, check_decay=False)
    assert np.max(np.abs(p.q.values - single_pole_q(p.grid.x))) < 1e-8


def test_evolve_writes_snapshots(tmp_path, capsys, single_pole_file):
    code, summary, _ = run(capsys, "evolve", "--triplets", single_pole_file, "--grid", "-5,5,1001",
                           "--times", "0,0.25,0.5", "--out", tmp_path / "ev")
    assert code == 0 and summary["max_residual"] < 1e-4
    assert sorted(os.listdir(tmp_path / "ev")) == ["potentials_t0.csv", "potentials_t1.csv", "potentials_t2.csv",
                                            "residuals.json", "stacked.csv"]
    assert len((tmp_path / "ev" / "stacked.csv").read_text().splitlines()) == 1 + 3 * 1001


def test_validate_zero_potential_passes_exactly(tmp_path, capsys):
    code, summary, _ = run(capsys, "validate", "--potential", "zero", "--grid", "-4,4,81",
                           "--lambda-grid", "-4,4,9", "--out", tmp_path)
    assert code == 0 and summary["all_pass"]
    assert all(c["residual"] < 1e-15 for c in summary["checks"].values())


def test_validate_soliton(tmp_path, capsys):
    code, summary, _ = run(capsys, "validate", "--potential", "soliton", "--grid", "-12,12,2401",
                           "--lambda-grid", "-4,4,81", "--out", tmp_path)
    assert code == 0 and summary["checks"]["unitarity"]["residual"] < 1e-6


def test_validate_failure_exit_code(tmp_path, capsys, monkeypatch):
    monkeypatch.setitem(cli.VALIDATION_TOLERANCES, "unitarity", 0.0)
    code, summary, _ = run(capsys, "validate", "--grid", "-6,6,601", "--lambda-grid", "-2,2,5",
                           "--out", tmp_path)
    assert code == 1 and not summary["all_pass"] and not summary["checks"]["unitarity"]["pass"]


def test_summaries_are_deterministic(tmp_path, capsys, single_pole_file):
    args = ["reflectionless", "--triplets", single_pole_file, "--grid", "-5,5,201"]
    _, _, first = run(capsys, *args, "--out", tmp_path / "a")
    _, _, second = run(capsys, *args, "--out", tmp_path / "b")
    assert first.replace("/a", "/b") == second
    assert (tmp_path / "a" / "potentials.csv").read_bytes() == (tmp_path / "b" / "potentials.csv").read_bytes()


def test_environment_overrides_output(tmp_path, capsys, monkeypatch, single_pole_file):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    code, summary, _ = run(capsys, "reflectionless", "--triplets", single_pole_file, "--grid", "-5,5,101",
                           "--out", tmp_path / "flag")
    assert code == 0 and (tmp_path / "env" / "potentials.csv").exists()
    assert not (tmp_path / "flag").exists()


def test_config_file_overrides_flags(tmp_path, capsys, single_pole_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": [-3, 3, 31], "out": str(tmp_path / "cfg_out")}))
    code, _, _ = run(capsys, "reflectionless", "--triplets", single_pole_file, "--grid", "-5,5,101",
                     "--config", cfg, "--out", tmp_path / "flag")
    assert code == 0
    assert len((tmp_path / "cfg_out" / "potentials.csv").read_text().splitlines()) == 32


@pytest.mark.parametrize("argv", [
    ["direct", "--grid", "1,0,5"],
    ["direct", "--grid", "0,1"],
    ["direct", "--tol-ode", "-1"],
    ["direct", "--potential", "csv"],
    ["reflectionless"],
    ["marchenko"],
])
def test_invalid_configuration_exit_code(tmp_path, capsys, argv):
    code, summary, _ = run(capsys, *argv, "--out", tmp_path)
    assert code == 2 and summary["kind"] == "config"


def test_malformed_inputs_exit_code(tmp_path, capsys):
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("x,y\n1,2\n")
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_key": 1}))
    for argv in (["direct", "--potential", "csv", "--input", bad_csv],
                 ["reflectionless", "--triplets", bad_json],
                 ["direct", "--config", cfg]):
        code, _, _ = run(capsys, *argv, "--out", tmp_path / "o")
        assert code == 2


def test_same_input_and_output_rejected(tmp_path, capsys):
    code, _, _ = run(capsys, "direct", "--potential", "csv", "--input", tmp_path, "--out", tmp_path)
    assert code == 2


def test_numerical_failure_exit_code(tmp_path, capsys, single_pole_file):
    code, summary, _ = run(capsys, "marchenko", "--triplets", single_pole_file, "--anchors", "-1,1,3",
                           "--cond-cap", "1.0", "--out", tmp_path)
    assert code == 3 and summary["kind"] == "numerical"
    code, summary, _ = run(capsys, "roundtrip", "--potential", "soliton", "--grid", "-12,12,2401",
                           "--out", tmp_path)
    assert code == 3 and "bound states" in summary["error"]


def test_io_failure_exit_code(tmp_path, capsys):
    code, summary, _ = run(capsys, "reflectionless", "--triplets", tmp_path / "missing.json", "--out", tmp_path)
    assert code == 4 and summary["kind"] == "io"
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, _ = run(capsys, "direct", "--potential", "zero", "--grid", "-2,2,21", "--lambda-grid", "-1,1,3",
                     "--out", blocker / "sub")
    assert code == 4


def test_atomic_write_leaves_nothing_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "x.json"

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        cli.atomic_write(target, "data")
    assert os.listdir(tmp_path) == []


def test_json_encoding():
    text = cli.dumps({"z": 1 + 2j, "x": 0.1, "a": np.arange(2), "b": [True, None], "n": float("nan")})
    assert text == '{"z": [1, 2], "x": 0.10000000000000001, "a": [0, 1], "b": [true, null], "n": null}'
    assert float(json.loads(cli.dumps(np.pi))) == np.pi


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "giscatter", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "roundtrip" in res.stdout
