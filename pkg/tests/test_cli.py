import json

import pytest

from hwcodesign.cli import EXIT_OK, EXIT_VALIDATION, main
from hwcodesign.cli.config import ConfigError, Settings


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out-dir", str(out)])
    return code, out


def test_space_stats(tmp_path, capsys):
    code, out = run(tmp_path, "ss", "space-stats")
    assert code == EXIT_OK
    assert "total 32768" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    for key in ("command", "subcommand", "config_hash", "seed", "checkpoints", "version", "wall_clock_s"):
        assert key in manifest


def test_simulate_writes_report(tmp_path):
    code, out = run(tmp_path, "sim", "simulate", "--arch", "357x357x3", "--hw", "4-4-5-5-15-18-17")
    assert code == EXIT_OK
    header = (out / "results.csv").read_text().splitlines()[0]
    assert header.startswith("cycles,")


@pytest.mark.parametrize("args", [
    ["simulate", "--arch", "33"],
    ["simulate", "--arch", "333333333", "--hw", "9-9"],
    ["simulate", "--arch", "333333333", "--hw", "3-3-5-6-20-20-20"],
    ["space-stats", "--set", "rl.nope=1"],
    ["space-stats", "--set", "predictor.epochs=abc"],
    ["train-pred", "--data", "missing.csv"],
    ["eval-rl", "--agent", "missing.json"],
    ["train-rl", "--predictor", "missing.json", "--setting", "composite", "--algo", "dqn"],
])
def test_validation_errors_exit_2(tmp_path, args):
    code, _ = run(tmp_path, "bad", *args)
    assert code == EXIT_VALIDATION


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[rl]\nsteps = 1234\n[codesign]\nseeds = 4, 5\n")
    s = Settings()
    s.load_file(cfg)
    assert s.get("rl", "steps") == 1234 and s.get("codesign", "seeds") == (4, 5)
    (tmp_path / "broken.ini").write_text("steps = 3\n")
    with pytest.raises(ConfigError):
        Settings().load_file(tmp_path / "broken.ini")
    with pytest.raises(ConfigError):
        Settings().load_file(tmp_path / "absent.ini")
    code, out = run(tmp_path, "c", "space-stats", "--config", str(cfg))
    assert code == EXIT_OK
    assert json.loads((out / "manifest.json").read_text())["settings"]["rl"]["steps"] == 1234


def test_gen_data_is_byte_identical(tmp_path):
    a = run(tmp_path, "a", "gen-data", "--n", "50", "--seed", "3")[1]
    b = run(tmp_path, "b", "gen-data", "--n", "50", "--seed", "3")[1]
    assert (a / "dataset.csv").read_bytes() == (b / "dataset.csv").read_bytes()
    c = run(tmp_path, "c", "gen-data", "--n", "50", "--seed", "4")[1]
    assert (a / "dataset.csv").read_bytes() != (c / "dataset.csv").read_bytes()


def test_train_pred_then_report_errors(tmp_path):
    data = run(tmp_path, "d", "gen-data", "--n", "120", "--seed", "0")[1]
    code, out = run(tmp_path, "p", "train-pred", "--data", str(data / "dataset.csv"), "--epochs", "2")
    assert code == EXIT_OK and (out / "predictor.json").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["checkpoints"]) == {"dataset", "predictor"}
    # report refuses directories without codesign/study results
    code, _ = run(tmp_path, "r", "report", str(out))
    assert code == EXIT_VALIDATION
    code, _ = run(tmp_path, "r2", "report", str(tmp_path / "nothing"))
    assert code == EXIT_VALIDATION


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "hwcodesign" in capsys.readouterr().out
