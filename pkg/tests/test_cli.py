import json
import math

import numpy as np
import pytest

from kravchuk_zeros import cli
from kravchuk_zeros import io as kio
from kravchuk_zeros.cli import main, replay_argv


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    return code


@pytest.fixture
def noisy(tmp_path):
    path = tmp_path / "y.csv"
    assert run(["synth", "--n", 65, "--f1", 0.2, "--f2", 0.6, "--snr", 2, "--seed", 4, "-o", path]) == 0
    return path


def test_synth_noiseless_and_seeded(tmp_path):
    a = tmp_path / "a.csv"
    assert run(["synth", "-o", a]) == 0
    sig, meta = kio.read_signal_csv(a)
    assert len(sig) == 513 and meta["config"]["snr"] == "inf"
    assert np.linalg.norm(sig.samples) == pytest.approx(1.0)
    assert run(["synth", "--snr", "2", "-o", tmp_path / "b.csv"]) == 1


def test_synth_to_stdout(capsys):
    assert run(["synth", "--n", 9, "--f1", 0.05, "--f2", 0.08]) == 0
    out = capsys.readouterr().out
    assert "index,t,re,im" in out and out.count("\n") > 9


def test_spectrogram_formats_and_mask(tmp_path, noisy):
    csv = tmp_path / "s.csv"
    assert run(["spectrogram", noisy, "--n-theta", 8, "--complex", "--mask", 0.5, "-o", csv]) == 0
    spec, meta = kio.read_spectrogram_csv(csv)
    assert spec.grid.shape == (8, 16) and spec.transform_values is not None
    assert meta["config"]["input"] == str(noisy)
    assert (tmp_path / "s.csv.mask.csv").exists()
    binary = tmp_path / "s.bin"
    assert run(["spectrogram", noisy, "--n-theta", 8, "--format", "binary", "-o", binary]) == 0
    back, bmeta = kio.read_spectrogram_binary(open(binary, "rb"), with_metadata=True)
    np.testing.assert_array_equal(back.values, spec.values)
    assert bmeta["command"] == "spectrogram"
    assert run(["spectrogram", noisy, "--mask", 0.5]) == 1


def test_zeros_from_signal_and_binary(tmp_path, noisy):
    z1 = tmp_path / "z1.csv"
    assert run(["zeros", noisy, "-q", "-o", z1]) == 0
    pat, meta = kio.read_points_csv(z1)
    assert meta["n_expected"] == 64 and abs(len(pat) - 64) <= 2
    binary = tmp_path / "s.bin"
    run(["spectrogram", noisy, "--frame", "standard", "--n-theta", 40, "--format", "binary", "-o", binary])
    assert run(["zeros", binary, "-q", "-o", tmp_path / "z2.csv"]) == 0


def test_stats_curves(tmp_path, noisy):
    z = tmp_path / "z.csv"
    run(["zeros", noisy, "-q", "-o", z])
    for stat in ("F", "K"):
        out = tmp_path / f"{stat}.csv"
        assert run(["stats", z, "--stat", stat, "--n-radii", 50, "-o", out]) == 0
        curve, meta = kio.read_curve_csv(out)
        assert curve.kind == stat and curve.values.size == 50
    assert curve.radii[-1] == pytest.approx(math.pi)
    empty = tmp_path / "empty.csv"
    empty.write_text("theta,phi\n")
    assert run(["stats", empty]) == 1


def test_envelope_test_command(tmp_path, noisy):
    out = tmp_path / "t.json"
    argv = ["test", noisy, "--m", 19, "--n-radii", 100, "-q", "-o", out]
    assert run(argv) == 1  # seed required
    assert run(argv + ["--seed", 5]) == 0
    payload = json.loads(out.read_text())
    assert {"s_observed", "rank", "reject", "seed", "config"} <= set(payload)
    assert payload["seed"] == 5 and payload["run"]["config"]["m"] == 19


def test_power_command_outputs(tmp_path):
    js, csv = tmp_path / "p.json", tmp_path / "p.csv"
    argv = ["power", "--n", 128, "--f1", 0.1, "--f2", 0.3, "--snr", 1, "inf", "--stat", "F", "K",
            "--transform", "kravchuk", "fourier", "--reps", 2, "--m", 19, "--n-radii", 50,
            "--seed", 1, "-q", "--json", js, "--csv", csv]
    assert run(argv) == 0
    reports = json.loads(js.read_text())["reports"]
    # fourier runs F only: 2 snr x (2 kravchuk + 1 fourier)
    assert len(reports) == 6
    assert {r["transform"] for r in reports} == {"kravchuk", "fourier"}
    assert all(r["ci_lo"] <= r["beta_hat"] <= r["ci_hi"] for r in reports)
    lines = [l for l in csv.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "snr,N,duration,statistic,transform,power,ci_lo,ci_hi" and len(lines) == 7


def test_diag_basis(tmp_path):
    out = tmp_path / "g.csv"
    assert run(["diag-basis", "--n", 100, "-q", "-o", out]) == 0
    _, header, data = kio.read_table(out)
    dev = data[:, 2].reshape(101, 101)
    assert dev.max() > 1e-12 and dev[:21, :21].max() < 1e-10
    assert run(["diag-basis", "--n", 0]) == 1


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("# sweep defaults\nm = 19\nalpha = 0.1\nstat = K\n")
    assert run(["test", "x.csv", "--config", cfg, "--show-config"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["m"] == 19 and shown["alpha"] == 0.1 and shown["stat"] == "K"
    assert run(["test", "x.csv", "--config", cfg, "--m", 39, "--show-config"]) == 0
    assert json.loads(capsys.readouterr().out)["m"] == 39
    bad = tmp_path / "bad.conf"
    bad.write_text("bogus = 3\n")
    assert run(["test", "x.csv", "--config", bad]) == 1
    bad.write_text("stat = G\n")
    assert run(["test", "x.csv", "--config", bad]) == 1
    bad.write_text("no equals sign\n")
    assert run(["test", "x.csv", "--config", bad]) == 1


def test_show_config_lists_defaults(capsys):
    assert run(["power", "--show-config"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["m"] == 199 and shown["alpha"] == 0.05 and shown["reps"] == 200 and shown["threshold"] == 0.075
    assert "threads" not in shown


def test_exit_codes(tmp_path, noisy, monkeypatch):
    assert run(["zeros", tmp_path / "missing.csv"]) == 2
    assert run(["nonsense"]) == 1
    assert run(["synth", "--threshold", 2]) == 1
    assert run(["test", noisy, "--seed", 1, "--m", 100]) == 1
    assert run(["synth", "--threads", 0]) == 1
    garbage = tmp_path / "garbage.bin"
    garbage.write_bytes(b"\xff\xfe\x00" * 10)
    assert run(["zeros", garbage]) == 2

    from kravchuk_zeros import detection
    from kravchuk_zeros.zeros import PointPattern

    monkeypatch.setattr(detection, "extract_zeros_spherical", lambda spec, *a, **k: PointPattern(np.empty((0, 2))))
    assert run(["test", noisy, "--seed", 1, "--m", 19, "-q"]) == 3


@pytest.mark.parametrize("command", ["spectrogram", "zeros", "stats", "test"])
def test_replay_from_header_is_bit_identical(tmp_path, noisy, command):
    first = tmp_path / "first.out"
    base = {"spectrogram": ["spectrogram", noisy, "--n-theta", 10],
            "zeros": ["zeros", noisy, "-q"],
            "stats": None,
            "test": ["test", noisy, "--seed", 3, "--m", 19, "--n-radii", 80, "-q"]}[command]
    if command == "stats":
        z = tmp_path / "z.csv"
        run(["zeros", noisy, "-q", "-o", z])
        base = ["stats", z, "--n-radii", 40]
    assert run(base + ["-o", first]) == 0
    if command == "test":
        meta = json.loads(first.read_text())["run"]
    else:
        meta = kio.read_table(first)[0]
    second = tmp_path / "second.out"
    assert run(replay_argv(meta) + ["-o", second, "-q"]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_replay_synth(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["synth", "--n", 33, "--f1", 0.1, "--f2", 0.2, "--snr", 1.5, "--seed", 9, "-o", first])
    meta, _, _ = kio.read_table(first)
    assert run(replay_argv(meta) + ["-o", second]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_thread_count_does_not_change_outputs(tmp_path, noisy):
    outs = []
    for threads in (1, 2):
        out = tmp_path / f"t{threads}.json"
        run(["test", noisy, "--seed", 2, "--m", 19, "--n-radii", 80, "--threads", threads, "-q", "-o", out])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "kravchuk_zeros", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "kravchuk-zeros" in res.stdout
