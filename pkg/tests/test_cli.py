import csv
import io
import json
import math
import subprocess
import sys

import pytest

from heatcount import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


SCHEMAS = {
    "populations": (["--t", "0.1,0.5"], ["t", "rho00", "rho11", "rho22"]),
    "cgf": (["--t", "0.5", "--eta", "0.5"], ["t", "eta", "theta"]),
    "heat": (["--t", "0.7"], ["q", "prob"]),
    "nonunitality": (["--t", "0.7"], ["t", "n_e", "n_e_closed"]),
    "audit": (["--t", "0.3,0.9"], ["t", "beta_mean_q", "delta_s", "mutual_info", "rel_entropy", "residual"]),
    "mc": (["--t", "0.7", "--samples", "2000"], ["q", "prob_empirical", "prob_exact", "sigma"]),
    "ldf": (["--eta=-0.5,0.5"], ["eta", "theta", "b_lower", "b_upper"]),
    "dscan": (["--omega1-steps", "2", "--t-steps", "700", "--beta", "2"], ["omega1", "d"]),
    "bounds": (["--t", "0.5"], ["t", "beta_mean_q", "bound_eta_1.0"]),
}


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_csv_header(capsys, command):
    args, header = SCHEMAS[command]
    code, out, _ = run_cli(capsys, command, *args)
    assert code == cli.EXIT_OK
    rows = read_csv(out)
    assert rows[0] == header and len(rows) > 1
    assert all(len(r) == len(header) for r in rows)
    assert "\r" not in out


@pytest.mark.parametrize("command", ["populations", "ldf", "heat"])
def test_json_document(capsys, command):
    args, header = SCHEMAS[command]
    code, out, _ = run_cli(capsys, command, *args, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["meta"]["command"] == command and doc["meta"]["config"]["format"] == "json"
    assert list(doc["data"]) == header
    assert len({len(col) for col in doc["data"].values()}) == 1


def test_render_empty_table_is_header_only():
    assert cli.render_table([], ["a", "b"], "csv", {}) == "a,b\n"


def test_render_json_non_finite():
    doc = json.loads(cli.render_table([[math.nan, math.inf]], ["x", "y"], "json", {"k": 1}))
    assert doc["data"] == {"x": [None], "y": ["inf"]} and doc["meta"] == {"k": 1}


def test_csv_keeps_full_precision(capsys):
    _, out, _ = run_cli(capsys, "cgf", "--t", "0.3", "--eta", "0.7")
    from heatcount import fcs, vmodel

    dist = vmodel.heat_distribution(cli.RunConfig().params(), 0.3)
    assert read_csv(out)[1][2] == repr(fcs.cgf_from_distribution(dist, 0.7).theta)


def test_cgf_vanishes_at_zero_eta(capsys):
    _, out, _ = run_cli(capsys, "cgf", "--eta", "0", "--t-steps", "5")
    assert all(float(r[2]) == 0.0 for r in read_csv(out)[1:])


def test_bounds_find_ln2_gap(capsys):
    _, out, _ = run_cli(capsys, "bounds", "--beta", "10", "--omega1", "0.5", "--format", "json")
    doc = json.loads(out)
    mean = max(doc["data"]["beta_mean_q"])
    bound = max(doc["data"]["bound_eta_10.0"])
    assert mean - bound == pytest.approx(math.log(2), abs=1e-6)
    assert doc["meta"]["refined_times"]


def test_bounds_reject_zero_eta(capsys):
    code, _, err = run_cli(capsys, "bounds", "--eta", "0", "--t", "0.5")
    assert code == cli.EXIT_CONFIG and "eta = 0" in err


def test_ldf_meta(capsys):
    _, out, _ = run_cli(capsys, "ldf", "--omega1", "0.01", "--eta=-0.1,0,0.1", "--format", "json")
    meta = json.loads(out)["meta"]
    assert meta["kink"] > 0 and meta["bound_scale"] == 1.0


def test_mc_is_byte_identical(tmp_path):
    paths = [tmp_path / f"run{k}.csv" for k in range(2)]
    for path in paths:
        assert cli.main(["mc", "--t", "0.7", "--samples", "5000", "--seed", "11", "-o", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_mc_needs_single_time(capsys):
    code, _, err = run_cli(capsys, "mc", "--t", "0.1,0.2")
    assert code == cli.EXIT_CONFIG and "exactly one time" in err


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\nbeta = 3.0\nomega1 = 0.4\nt = 0.2,0.4\n")
    _, out, _ = run_cli(capsys, "populations", "--config", str(cfg), "--omega1", "0.9", "--format", "json")
    echo = json.loads(out)["meta"]["config"]
    assert echo["beta"] == 3.0 and echo["omega1"] == 0.9 and echo["t"] == [0.2, 0.4]


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("temperature = 3\n")
    code, _, err = run_cli(capsys, "heat", "--t", "0.5", "--config", str(cfg))
    assert code == cli.EXIT_CONFIG and "unknown key" in err


def test_malformed_config_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("beta 3\n")
    assert run_cli(capsys, "heat", "--t", "0.5", "--config", str(cfg))[0] == cli.EXIT_CONFIG


def test_unknown_flag(capsys):
    assert run_cli(capsys, "heat", "--t", "0.5", "--temperature", "3")[0] == cli.EXIT_CONFIG


def test_invalid_parameter(capsys):
    code, _, err = run_cli(capsys, "heat", "--t", "0.5", "--J=-1")
    assert code == cli.EXIT_CONFIG and err.startswith("heatcount:")


def test_missing_output_directory(tmp_path, capsys):
    target = tmp_path / "nope" / "out.csv"
    assert run_cli(capsys, "heat", "--t", "0.5", "-o", str(target))[0] == cli.EXIT_CONFIG
    assert not target.exists()


def test_output_file_written(tmp_path):
    target = tmp_path / "pops.csv"
    assert cli.main(["populations", "--t", "0.5", "-o", str(target)]) == 0
    assert read_csv(target.read_text())[0][0] == "t"
    assert [p.name for p in tmp_path.iterdir()] == ["pops.csv"]


def test_audit_within_tolerance(capsys):
    _, out, _ = run_cli(capsys, "audit", "--t-steps", "9", "--format", "json")
    assert json.loads(out)["meta"]["max_residual"] < cli.AUDIT_TOL


def test_audit_failure_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "AUDIT_TOL", -1.0)
    code, _, err = run_cli(capsys, "audit", "--t", "0.5")
    assert code == cli.EXIT_NUMERIC and "residual" in err


def test_numeric_failure_exit_code(monkeypatch, capsys):
    def boom(cfg):
        raise RuntimeError("solver diverged")

    monkeypatch.setitem(cli.HANDLERS, "heat", boom)
    assert run_cli(capsys, "heat", "--t", "0.5")[0] == cli.EXIT_NUMERIC


def test_infinite_beta_rejected_where_needed(capsys):
    for command in ("bounds", "audit", "dscan"):
        assert run_cli(capsys, command, "--beta", "inf", "--t", "0.5")[0] == cli.EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heatcount", "heat", "--t", "0.7854"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("q,prob\n")
