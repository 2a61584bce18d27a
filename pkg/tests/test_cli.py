import csv

import numpy as np
import pytest

from spinsnn import cli
from spinsnn.io import idx


@pytest.fixture
def workspace(tmp_path):
    """Tiny MNIST-format dataset (bars) plus a small run config."""
    rng = np.random.default_rng(0)
    data = tmp_path / "data"
    data.mkdir()
    for split, n in (("train", 24), ("test", 12)):
        labels = rng.integers(0, 4, n).astype(np.uint8)
        imgs = np.zeros((n, 28, 28), dtype=np.uint8)
        for k, c in enumerate(labels):
            imgs[k, c * 7:c * 7 + 4, :] = 255
        names = (idx.TRAIN_IMAGES, idx.TRAIN_LABELS) if split == "train" else (idx.TEST_IMAGES, idx.TEST_LABELS)
        (data / names[0]).write_bytes(idx.encode_idx(imgs))
        (data / names[1]).write_bytes(idx.encode_idx(labels))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"[network]\nn_exc = 6\nsteps_per_image = 40\nn_train = 8\nn_assign = 12\nn_test = 12\n"
                   f"[data]\nmnist_dir = {data}\n")
    return tmp_path, cfg


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_train_twice_identical(workspace):
    tmp, cfg = workspace
    for name in ("a", "b"):
        assert run("train", "--config", cfg, "--seed", 42, "--out-dir", tmp / name) == 0
    for f in ("train_summary.txt", "train_stats.csv", "checkpoint.ckpt", "run.cfg"):
        assert (tmp / "a" / f).read_bytes() == (tmp / "b" / f).read_bytes()


def test_global_flags_before_command(workspace):
    tmp, cfg = workspace
    assert run("--config", cfg, "--seed", 42, "--out-dir", tmp / "a", "train") == 0
    assert run("train", "--config", cfg, "--seed", 42, "--out-dir", tmp / "b") == 0
    assert (tmp / "a" / "checkpoint.ckpt").read_bytes() == (tmp / "b" / "checkpoint.ckpt").read_bytes()


def test_eval_without_checkpoint(workspace, capsys):
    tmp, cfg = workspace
    assert run("eval", "--config", cfg, "--out-dir", tmp / "empty") == 1
    err = capsys.readouterr().err
    assert "missing input" in err
    assert not (tmp / "empty" / "eval_summary.csv").exists()


def test_train_eval_report_maps(workspace):
    tmp, cfg = workspace
    out = tmp / "o"
    assert run("train", "--config", cfg, "--out-dir", out, "--log-events", "--trace") == 0
    assert run("eval", "--out-dir", out) == 0
    with open(out / "eval_summary.csv") as fh:
        row = next(csv.DictReader(fh))
    assert 0.0 <= float(row["accuracy"]) <= 1.0 and int(row["n_test"]) == 12
    confusion = np.loadtxt(out / "confusion.csv", delimiter=",", skiprows=1, dtype=int)
    assert confusion[:, 1:].sum() == 12

    assert run("report", "--out-dir", out) == 0
    report = dict(line.split(" ", 1) for line in (out / "report.txt").read_text().splitlines())
    assert report["match"] == "True" and report["events_log"] == report["events_checkpoint"]
    assert int(report["events_log"]) > 0

    with open(out / "trace.csv") as fh:
        trace = list(csv.DictReader(fh))
    assert trace and set(trace[0]) == {"image", "step", "neuron"}

    assert run("emit-maps", "--out-dir", out) == 0
    assert len(list((out / "maps").glob("neuron_*.pgm"))) == 6 and (out / "maps" / "montage.pgm").exists()


def test_report_detects_tampered_log(workspace, capsys):
    tmp, cfg = workspace
    out = tmp / "o"
    run("train", "--config", cfg, "--out-dir", out, "--log-events")
    lines = (out / "events.csv").read_text().splitlines()
    (out / "events.csv").write_text("\n".join(lines[:-1]) + "\n")
    assert run("report", "--out-dir", out) == 1
    assert "do not match" in capsys.readouterr().err
    assert not (out / "report.txt").exists()


def test_resume_matches_uninterrupted(workspace):
    tmp, cfg = workspace
    assert run("train", "--config", cfg, "--out-dir", tmp / "full", "--log-events") == 0
    assert run("train", "--config", cfg, "--out-dir", tmp / "split", "--log-events", "--stop-after", 3) == 0
    assert run("train", "--out-dir", tmp / "split", "--log-events", "--resume") == 0
    assert (tmp / "full" / "checkpoint.ckpt").read_bytes() == (tmp / "split" / "checkpoint.ckpt").read_bytes()
    assert (tmp / "full" / "events.csv").read_bytes() == (tmp / "split" / "events.csv").read_bytes()
    assert run("report", "--out-dir", tmp / "split") == 0


def test_resume_without_checkpoint(workspace):
    tmp, cfg = workspace
    assert run("train", "--config", cfg, "--out-dir", tmp / "x", "--resume") == 1


def test_eval_rejects_changed_seed(workspace, capsys):
    tmp, cfg = workspace
    run("train", "--config", cfg, "--out-dir", tmp / "o")
    assert run("eval", "--out-dir", tmp / "o", "--seed", 999) == 1
    assert "hash mismatch" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [("bogus",), ("train", "--bogus"), (), ("micromag",), ("micromag", "nope")])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as e:
        run(*argv)
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_bad_config_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[network]\nbogus = 1\n")
    assert run("train", "--config", bad, "--out-dir", tmp_path) == 1
    assert "bogus" in capsys.readouterr().err


def test_calibrate_from_sweep_file(tmp_path):
    rows = [(0.0, 0.0), (1e11, 50.0), (2e11, 100.0), (4e11, 190.0), (1.6e12, 420.0), (2e12, 430.0)]
    with open(tmp_path / "velocity.csv", "w") as fh:
        fh.write("J_A_per_m2,velocity_m_per_s,truncated,nucleated\n")
        fh.writelines(f"{j!r},{v!r},0,0\n" for j, v in rows)
    assert run("calibrate", "--out-dir", tmp_path) == 0
    text = (tmp_path / "calibration.txt").read_text()
    values = dict(line.split(" = ") for line in text.splitlines() if " = " in line)
    assert float(values["mu_dw"]) == pytest.approx(5e-10, rel=1e-9)
    assert float(values["v_sat"]) == pytest.approx(425.0)


def test_train_uses_calibrated_v_sat(workspace):
    tmp, cfg = workspace
    cal = tmp / "cal.txt"
    cal.write_text("mu_dw = 5e-10\nv_sat = 321.0\ncross_section = 6e-17\nparam_hash = 'x'\n")
    assert run("train", "--config", cfg, "--out-dir", tmp / "o", "--calibration", cal) == 0
    assert "v_sat = 321.0" in (tmp / "o" / "run.cfg").read_text()


def test_micromag_sweep_and_calibrate(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("[micromag]\nj_values = 0, 0.5e11, 1e11, 8e11\nduration = 0.1e-9\n")
    assert run("micromag", "sweep", "--config", cfg, "--out-dir", tmp_path) == 0
    with open(tmp_path / "velocity.csv") as fh:
        v = [float(r["velocity_m_per_s"]) for r in csv.DictReader(fh)]
    assert v[0] == 0.0 and 0 < v[1] < v[2] < v[3]
    assert run("calibrate", "--config", cfg, "--out-dir", tmp_path) == 0
    assert (tmp_path / "calibration.txt").exists()
