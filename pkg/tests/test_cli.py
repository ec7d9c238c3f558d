import csv

import pytest

from deepbrake.checkpoint import load_checkpoint
from deepbrake.cli import main
from deepbrake.config import parse_config

SMALL = "\n".join(["episodes = 6", "min_replay = 64", "hidden_sizes = 16, 16",
                   "target_sync = 50", "seed = 5"])


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def trained(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    return tmp_path


def test_train_outputs(trained, capsys):
    rows = read(trained / "episodes.csv")
    assert len(rows) == 6
    assert {"index", "outcome", "ret", "steps", "smoothed_ret"} <= set(rows[0])
    ck = load_checkpoint(trained / "checkpoint.bin")
    assert ck.config == parse_config(SMALL)


def test_config_echo(trained, capsys):
    main(["eval-ncap", "--out", str(trained)])
    out = capsys.readouterr().out
    echoed = "\n".join(line[2:] for line in out.splitlines()
                       if line.startswith("# ") and "=" in line)
    assert parse_config(echoed) == parse_config(SMALL)


def test_eval_ttc_default_table_shape(trained):
    assert main(["eval-ttc", "--trials", "3", "--out", str(trained)]) == 0
    rows = read(trained / "ttc_sweep.csv")
    assert [float(r["ttc"]) for r in rows] == [round(0.9 + 0.2 * k, 1) for k in range(16)]
    assert all(int(r["trials"]) == 3 for r in rows)
    assert {"collisions", "rate_pct", "infeasible", "infeasible_mc_pct"} <= set(rows[0])


def test_eval_ttc_extras(trained):
    assert main(["eval-ttc", "--trials", "2", "--ttc", "1.5,2.5", "--stay", "5", "--gaps", "5",
                 "--out", str(trained)]) == 0
    assert len(read(trained / "ttc_sweep.csv")) == 2
    assert int(read(trained / "stay_liveness.csv")[0]["episodes"]) == 5
    assert (trained / "stopping_gaps.csv").exists()


def test_eval_ncap_table(trained):
    assert main(["eval-ncap", "--out", str(trained)]) == 0
    rows = read(trained / "ncap.csv")
    assert len(rows) == 18
    assert [r["test"] for r in rows] == ["CVFA"] * 9 + ["CVNA"] * 9


def test_trace(trained):
    assert main(["trace", "--ttc", "1.5", "--out", str(trained)]) == 0
    rows = read(trained / "trace.csv")
    assert rows[0]["t"] == "0.0" and rows[-1]["event"] in ("Stop", "Bump", "Pass", "Cross")


def test_stub_policy_without_checkpoint(tmp_path):
    assert main(["eval-ncap", "--stub", "nothing", "--out", str(tmp_path)]) == 0
    assert all(r["collided"] == "True" for r in read(tmp_path / "ncap.csv"))


def test_missing_checkpoint_is_an_error(tmp_path, capsys):
    assert main(["eval-ttc", "--out", str(tmp_path)]) == 1
    assert "checkpoint not found" in capsys.readouterr().err


def test_bad_config_is_an_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("saftey_line = 4\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "unknown key 'saftey_line'" in capsys.readouterr().err


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DEEPBRAKE_OUTPUT_DIR", str(tmp_path / "env_out"))
    assert main(["eval-ncap", "--stub", "high"]) == 0
    assert (tmp_path / "env_out" / "ncap.csv").exists()


def test_ablation_writes_both_logs(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    assert main(["ablate-trauma", "--config", str(cfg), "--window", "4",
                 "--out", str(tmp_path)]) == 0
    on, off = read(tmp_path / "episodes_trauma_on.csv"), read(tmp_path / "episodes_trauma_off.csv")
    assert len(on) == len(off) == 6
    summary = read(tmp_path / "ablation_summary.csv")
    assert [r["trauma"] for r in summary] == ["on", "off"]
    assert summary[1]["trauma_reads"] == "0"
    # the trauma-on log is the plain training run with the same seed
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "plain")]) == 0
    assert (tmp_path / "plain" / "episodes.csv").read_bytes() == \
        (tmp_path / "episodes_trauma_on.csv").read_bytes()


def test_tables_are_deterministic(trained, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["eval-ttc", "--trials", "3", "--ttc", "1.5", "--checkpoint",
              str(trained / "checkpoint.bin"), "--out", str(out)])
        outs.append((out / "ttc_sweep.csv").read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "deepbrake", "--version"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and res.stdout.strip()
