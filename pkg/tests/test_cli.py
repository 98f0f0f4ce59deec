"""CLI tests.

Core claims:
    - exit codes follow the contract: 0 ok, 1 input problems, 2 numerical
    - verify/gradcheck print their measured error and gate on tolerance
    - gen/run/metrics wire files end to end, with override echo
    - unknown flags or verbs fail before any work happens
"""

import numpy as np
import pytest

from recridge import cli
from recridge import cil_harness as ch


def _write_synth_config(tmp_path, **overrides):
    defaults = {
        "pipeline": "repoint",
        "schedule": "6/3",
        "synth_classes": 6,
        "synth_per_class": 40,
        "synth_test_per_class": 20,
        "synth_dim": 12,
        "synth_separation": 10.0,
        "synth_seed": 5,
    }
    defaults.update(overrides)
    path = tmp_path / "exp.cfg"
    path.write_text("".join(f"{k} = {v}\n" for k, v in defaults.items()))
    return path


# -- verify / gradcheck -------------------------------------------------------


def test_verify_passes_and_prints_error(capsys):
    assert cli.main(["verify", "--phases", "4", "--seed", "7"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("max_rel_error=")
    assert float(out.split("=", 1)[1]) <= 1e-8


@pytest.mark.parametrize("flag", ["--force-woodbury", "--force-direct"])
def test_verify_forced_paths(capsys, flag):
    assert cli.main(["verify", "--phases", "3", "--seed", "1", flag]) == 0
    assert float(capsys.readouterr().out.split("=", 1)[1]) <= 1e-8


def test_verify_forced_paths_mutually_exclusive():
    assert cli.main(["verify", "--force-woodbury", "--force-direct"]) == 1


def test_gradcheck_passes(capsys):
    assert cli.main(["gradcheck", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert float(out.split("=", 1)[1]) <= 1e-4


# -- argument handling --------------------------------------------------------


def test_missing_config_exits_1_with_path(tmp_path, capsys):
    missing = tmp_path / "absent.cfg"
    assert cli.main(["run", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_unknown_flag_exits_1(capsys):
    assert cli.main(["verify", "--bogus"]) == 1
    assert "--bogus" in capsys.readouterr().err


def test_unknown_verb_exits_1():
    assert cli.main(["frobnicate"]) == 1


def test_help_exits_0_and_lists_verbs(capsys):
    assert cli.main(["--help"]) == 0
    out = capsys.readouterr().out
    for verb in ("gen", "run", "verify", "gradcheck", "metrics"):
        assert verb in out


def test_subcommand_help_lists_flags(capsys):
    assert cli.main(["run", "--help"]) == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--eta", "--d-rp-mult", "--seed", "--phases",
                 "--pipeline", "--out", "--force-woodbury", "--force-direct"):
        assert flag in out


# -- gen ------------------------------------------------------------------------


def test_gen_writes_loadable_files(tmp_path, capsys):
    prefix = tmp_path / "toy"
    assert cli.main([
        "gen", "--out", str(prefix), "--classes", "3", "--per-class", "8",
        "--test-per-class", "4", "--dim", "5", "--seed", "2",
    ]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == 4
    feats = ch.load_features(f"{prefix}_train.fmat")
    labels = ch.load_labels(f"{prefix}_train.labl")
    assert feats.shape == (24, 5)
    assert sorted(set(labels)) == [0, 1, 2]
    assert ch.load_features(f"{prefix}_test.fmat").shape == (12, 5)


def test_gen_deterministic_bytes(tmp_path):
    args = ["gen", "--classes", "2", "--per-class", "5", "--dim", "3", "--seed", "9"]
    blobs = []
    for name in ("a", "b"):
        prefix = tmp_path / name
        assert cli.main(args + ["--out", str(prefix)]) == 0
        blobs.append((tmp_path / f"{name}_train.fmat").read_bytes())
    assert blobs[0] == blobs[1]


def test_gen_modalities_share_labels(tmp_path):
    for modality in ("point", "mesh"):
        assert cli.main([
            "gen", "--out", str(tmp_path / modality), "--classes", "3",
            "--per-class", "4", "--dim", "5", "--seed", "2", "--modality", modality,
        ]) == 0
    assert ch.load_labels(tmp_path / "point_train.labl") == ch.load_labels(
        tmp_path / "mesh_train.labl"
    )
    a = ch.load_features(tmp_path / "point_train.fmat")
    b = ch.load_features(tmp_path / "mesh_train.fmat")
    assert not np.array_equal(a, b)


# -- run --------------------------------------------------------------------------


def test_run_prints_result_lines(tmp_path, capsys):
    cfg = _write_synth_config(tmp_path)
    assert cli.main(["run", "--config", str(cfg)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("phase=0 seen_classes=2 acc=")
    assert lines[-1].startswith("A=")


def test_run_writes_outputs_and_effective_config(tmp_path, capsys):
    cfg = _write_synth_config(tmp_path)
    out = tmp_path / "res.txt"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--eta", "2.0"]) == 0
    report, seen = ch.load_result(out)
    assert seen == [2, 4, 6]
    assert (tmp_path / "res.csv").exists()
    echoed = ch.load_config(tmp_path / "res.cfg")
    assert echoed.eta == 2.0
    assert echoed.out == str(out)


def test_run_seed_and_phases_overrides(tmp_path, capsys):
    cfg = _write_synth_config(tmp_path)
    out = tmp_path / "res.txt"
    assert cli.main([
        "run", "--config", str(cfg), "--out", str(out), "--seed", "11", "--phases", "2",
    ]) == 0
    echoed = ch.load_config(tmp_path / "res.cfg")
    assert echoed.rp_seed == 11 and echoed.synth.seed == 11
    assert echoed.schedule.num_phases == 2


def test_run_naive_flag(tmp_path, capsys):
    cfg = _write_synth_config(tmp_path)
    assert cli.main(["run", "--config", str(cfg), "--naive"]) == 0
    final = capsys.readouterr().out.splitlines()[-1]
    # the naive baseline forgets, so its retention drop is large
    assert float(final.split("R=")[1]) > 30.0


def test_run_forced_path(tmp_path):
    cfg = _write_synth_config(tmp_path)
    assert cli.main(["run", "--config", str(cfg), "--force-direct"]) == 0


def test_run_file_mode_from_gen(tmp_path, capsys):
    prefix = tmp_path / "data"
    assert cli.main([
        "gen", "--out", str(prefix), "--classes", "4", "--per-class", "20",
        "--test-per-class", "10", "--dim", "6", "--seed", "3",
    ]) == 0
    capsys.readouterr()
    cfg = tmp_path / "file.cfg"
    cfg.write_text(
        "pipeline = repoint\nschedule = 4/2\n"
        "features_train = data_train.fmat\nlabels_train = data_train.labl\n"
        "features_test = data_test.fmat\nlabels_test = data_test.labl\n"
    )
    assert cli.main(["run", "--config", str(cfg)]) == 0
    final = capsys.readouterr().out.splitlines()[-1]
    assert float(final.split("R=")[1]) <= 1.0


# -- metrics ----------------------------------------------------------------------


def test_metrics_verb_prints_stored_values(tmp_path, capsys):
    path = tmp_path / "res.txt"
    path.write_text(
        "phase=0 seen_classes=4 acc=100.0\nphase=1 seen_classes=8 acc=93.02\n"
        "A=96.51 R=7.65\n"
    )
    assert cli.main(["metrics", str(path)]) == 0
    assert capsys.readouterr().out == "A=96.51 R=7.65\n"


def test_metrics_on_malformed_file(tmp_path, capsys):
    path = tmp_path / "res.txt"
    path.write_text("gibberish\n")
    assert cli.main(["metrics", str(path)]) == 1


# -- module entry point -------------------------------------------------------


def test_subprocess_module_invocation():
    import os
    import subprocess
    import sys

    env = dict(os.environ)
    src = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")
    env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
    proc = subprocess.run(
        [sys.executable, "-m", "recridge", "verify", "--phases", "3", "--seed", "1"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("max_rel_error=")
