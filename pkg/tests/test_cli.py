import json
import os
import subprocess
import sys

import pytest

from fpplab import cli
from fpplab.cli import ConfigError, main, parse_config, run
from fpplab.io import atomic_write, payload, plain, render_csv
from fpplab.seeding import DEFAULT_SEED

EXP = ["--dist", "exponential", "--dist-param", "lambda=1"]
MIX = ["--dist", "mixture", "--dist-param", "components=0.7*atom(0) + 0.3*exponential(1)"]


def test_minimal_scan_config_echoes_defaults():
    cfg = parse_config(["scan", *EXP, "--n-list", "8,16,32"], env={})
    assert cfg.n_list == (8, 16, 32)
    assert cfg.seed == DEFAULT_SEED and cfg.K == 4 and cfg.format == "csv"
    echo = cfg.echo()
    assert echo["command"] == "scan" and echo["replicates"] == 200
    assert "workers" not in echo and "output" not in echo


def test_alpha_out_of_range():
    with pytest.raises(ConfigError) as exc:
        parse_config(["cylinder-scan", *EXP, "--n-list", "8", "--alpha", "1.5"], env={})
    assert "alpha must lie in (0,1)" in exc.value.errors


def test_missing_distribution_names_field():
    with pytest.raises(ConfigError) as exc:
        parse_config(["scan", "--n-list", "8"], env={})
    assert any("distribution" in e for e in exc.value.errors)


def test_errors_are_collected():
    with pytest.raises(ConfigError) as exc:
        parse_config(["flip", *EXP, "--K", "1", "--replicates", "0", "--format", "xml"], env={})
    errs = exc.value.errors
    assert "missing field: x" in errs and "K must be >= 2" in errs
    assert "replicates must be >= 1" in errs and "format must be csv or json" in errs


def test_precedence_file_env_flag(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nseed = 5\nreplicates = 7\n[model]\nK = 3\n[distribution]\nname = uniform\na = 0\nb = 2\n")
    cfg = parse_config(["scan", "--config", str(ini), "--n-list", "4"], env={})
    assert (cfg.seed, cfg.replicates, cfg.K, cfg.dist_name) == (5, 7, 3, "uniform")
    cfg = parse_config(["scan", "--config", str(ini), "--n-list", "4"], env={"FPPLAB_SEED": "9"})
    assert cfg.seed == 9
    cfg = parse_config(["scan", "--config", str(ini), "--n-list", "4", "--seed", "11"], env={"FPPLAB_SEED": "9"})
    assert cfg.seed == 11


def test_unknown_ini_field(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[run]\nbogus = 1\n[distribution]\nname = exponential\n")
    with pytest.raises(ConfigError) as exc:
        parse_config(["validate", "--config", str(ini)], env={})
    assert any("bogus" in e for e in exc.value.errors)


def test_validate_exit_codes(capsys):
    assert main(["validate", *MIX]) == cli.EXIT_FAIL
    out = capsys.readouterr().out
    assert "fail" in out
    assert main(["validate", *EXP]) == cli.EXIT_PASS


def test_config_error_exit_and_json(capsys):
    assert main(["scan", "--n-list", "8"]) == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and err["messages"]
    assert main(["nonsense"]) == cli.EXIT_CONFIG


def test_runtime_error_exit(capsys):
    # j_max too small for the target is only detected when the model is built
    code = main(["flip", *EXP, "--x", "40,0", "--K", "2", "--j-max", "2", "--a-low", "0", "--outer", "1", "--replicates", "1"])
    assert code == cli.EXIT_RUNTIME
    assert json.loads(capsys.readouterr().err)["error"] == "runtime"


def test_scan_deterministic_and_self_describing(tmp_path):
    out = tmp_path / "scan.csv"
    argv = ["scan", *EXP, "--n-list", "4,8", "--replicates", "20", "--seed", "3", "--output", str(out)]
    assert main(argv) == 0
    first = out.read_text()
    assert main(argv) == 0
    assert out.read_text() == first
    meta = [l for l in first.splitlines() if l.startswith("# ")]
    keys = {l[2:].split(":", 1)[0] for l in meta}
    assert {"schema_version", "seed", "config", "version", "command", "status"} <= keys
    assert payload(first).splitlines()[0] == ",".join(cli_scan_columns())


def cli_scan_columns():
    from fpplab.experiments.scans import SCAN_COLUMNS

    return SCAN_COLUMNS


def test_json_output_mirrors_rows():
    cfg = parse_config(["scan", *EXP, "--n-list", "4", "--replicates", "10", "--format", "json"], env={})
    code, text = run(cfg)
    doc = json.loads(text)
    assert code == 0 and doc["status"] == "pass" and doc["rows"][0]["n"] == 4
    assert doc["config"]["n_list"] == [4]


def test_workers_do_not_change_payload():
    texts = set()
    for w in ("1", "2", "8"):
        cfg = parse_config(["scan", *EXP, "--n-list", "4,6", "--replicates", "16", "--workers", w], env={})
        texts.add(run(cfg)[1])
    assert len(texts) == 1


def test_antichain_inconclusive_exit():
    argv = ["antichain", "--dist", "two_point", "--dist-param", "low=1", "--dist-param", "high=10",
            "--d0", "1", "--K", "2", "--x", "8,0", "--a-low", "0", "--replicates", "200", "--require-good", "false"]
    cfg = parse_config(argv, env={})
    code, text = run(cfg)
    assert code in (cli.EXIT_PASS, cli.EXIT_INCONCLUSIVE)
    status = [l for l in text.splitlines() if l.startswith("# status")][0]
    assert {0: "pass", 2: "inconclusive"}[code] in status


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "out.txt"
    atomic_write(str(p), "hello\n")
    atomic_write(str(p), "again\n")
    assert p.read_text() == "again\n"
    assert os.listdir(p.parent) == ["out.txt"]


def test_plain_and_empty_rows():
    import numpy as np

    assert plain({"a": np.float64("nan"), "b": np.int64(2), "c": np.array([1, 2])}) == {"a": None, "b": 2, "c": [1, 2]}
    text = render_csv({"seed": 1}, "pass", {"x": 1.5, "ok": True}, [])
    assert payload(text) == "key,value\nok,true\nx,1.5\n"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fpplab", "validate", *EXP], capture_output=True, text=True)
    assert proc.returncode == 0 and "pass" in proc.stdout
