"""CLI surface: exit codes, written files, printed lines.

All invocations go through main(argv) with the default in-process client so
the tests exercise the same client/service round trip a user gets.  The
--server path is not spun up here; it shares every line of code except the
base URL.
"""

import json

import pytest

from egvip.cli import main

CONFIG = """
[first]
problem = "quadratic-game"
problem_n = 10
problem_d = 3
problem_interpolated = true
algorithm = "eg"
gamma = 0.2
omega = 0.2
seeds = [0]
iterations = 3
metrics = ["dist_sq"]

[second]
problem = "weak-minty-scalar"
problem_n = 10
algorithm = "eg"
gamma = 0.05
omega = 0.05
seeds = [0, 1]
iterations = 4
metrics = ["dist_sq", "norm_f_sq"]
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(CONFIG)
    return path


def test_run_writes_one_csv_per_experiment(config_file, tmp_path, capsys):
    out = tmp_path / "results"
    code = main(["run", "--config", str(config_file), "--out", str(out)])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert all(line.startswith("wrote ") and "rows)" in line for line in lines)
    first = (out / "first.csv").read_text()
    assert first.splitlines()[0] == (
        "experiment,seed,iteration,oracle_calls,comm_rounds,metric,value"
    )
    assert (out / "second.csv").exists()


def test_run_only_selects_one_section(config_file, tmp_path, capsys):
    out = tmp_path / "results"
    code = main([
        "run", "--config", str(config_file), "--out", str(out), "--only", "second",
    ])
    assert code == 0
    assert not (out / "first.csv").exists()
    assert (out / "second.csv").exists()


def test_run_jobs_matches_serial_output(config_file, tmp_path):
    out_a = tmp_path / "serial"
    out_b = tmp_path / "parallel"
    assert main(["run", "--config", str(config_file), "--out", str(out_a)]) == 0
    assert main([
        "run", "--config", str(config_file), "--out", str(out_b), "--jobs", "2",
    ]) == 0
    for name in ("first.csv", "second.csv"):
        assert (out_a / name).read_text() == (out_b / name).read_text()


def test_run_parse_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(CONFIG + 'scheme = "bogus"\n')
    code = main(["run", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("error: second.scheme:")


def test_run_runtime_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(CONFIG + 'scheme = "minibatch"\ntau = 50\n')
    code = main(["run", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "tau = 50 exceeds n = 10" in capsys.readouterr().err


def test_run_missing_config_exits_2(tmp_path, capsys):
    code = main([
        "run", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path),
    ])
    assert code == 2
    assert capsys.readouterr().err.startswith("error:")


def test_verify_prints_pass_lines(capsys):
    code = main(["verify", "--suite", "nu-roots"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert all(line.startswith("PASS nu-roots:") for line in lines[:-1])
    assert lines[-1].endswith("checks, 0 failed")


def test_verify_json_output(capsys):
    code = main(["verify", "--suite", "nu-roots", "--json"])
    assert code == 0
    body = json.loads(capsys.readouterr().out)
    assert body["suite"] == "nu-roots"
    assert body["passed"] is True


def test_verify_unknown_suite_exits_2(capsys):
    code = main(["verify", "--suite", "vibes"])
    assert code == 2
    assert "unknown suite" in capsys.readouterr().err


def test_verify_failure_exits_1(monkeypatch, capsys):
    class FakeReport:
        def to_dict(self):
            return {
                "suite": "all",
                "passed": False,
                "checks": [{
                    "suite": "s", "name": "broken", "passed": False,
                    "measured": 2.0, "threshold": 1.0, "detail": "2 > 1",
                }],
            }

    monkeypatch.setattr("egvip.service.verify_theory", lambda suite: FakeReport())
    code = main(["verify"])
    assert code == 1
    out = capsys.readouterr().out
    assert "FAIL s:broken" in out
    assert "1 checks, 1 failed" in out


def test_list_prints_registry(capsys):
    assert main(["list", "problems"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "quadratic-game" in out
    assert "client-games" in out
    assert main(["list", "policies"]) == 0
    assert "weak-minty" in capsys.readouterr().out.splitlines()


def test_list_rejects_unknown_kind():
    with pytest.raises(SystemExit) as exc:
        main(["list", "recipes"])
    assert exc.value.code == 2


def test_er_constants_prints_rows(tmp_path, capsys):
    path = tmp_path / "er.toml"
    path.write_text(CONFIG.replace(
        'metrics = ["dist_sq"]', 'metrics = ["dist_sq"]\nscheme = "single-uniform"'
    ))
    code = main(["er-constants", "--config", str(path)])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("first: delta=")
    assert "sigma_star_sq=" in lines[0]


def test_er_constants_missing_file_exits_2(tmp_path, capsys):
    code = main(["er-constants", "--config", str(tmp_path / "none.toml")])
    assert code == 2
    assert capsys.readouterr().err.startswith("error:")
