"""End-to-end command-line flows and their determinism/error contracts."""

import subprocess
import sys

import numpy as np

from tripletboost import make_moons, save_csv
from tripletboost.cli import main


def _moons_csv(tmp_path, n=40, seed=0, name="data.csv"):
    path = tmp_path / name
    save_csv(make_moons(n, 0.1, seed), path)
    return path


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGenTriplets:
    def test_full_clean_store_and_determinism(self, tmp_path, capsys):
        data = _moons_csv(tmp_path)
        out1, out2 = tmp_path / "t1.txt", tmp_path / "t2.txt"
        code, _, _ = _run(capsys, "gen-triplets", "--data", data,
                          "--proportion", 1.0, "--noise", 0.0,
                          "--seed", 3, "--out", out1)
        assert code == 0
        code, _, _ = _run(capsys, "gen-triplets", "--data", data,
                          "--proportion", 1.0, "--noise", 0.0,
                          "--seed", 3, "--out", out2)
        assert code == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_cosine_zero_vector_fails_cleanly(self, tmp_path, capsys):
        data = tmp_path / "zero.csv"
        data.write_text("a,0.0,0.0\nb,1.0,0.0\na,0.0,1.0\n", encoding="utf-8")
        code, out, err = _run(capsys, "gen-triplets", "--data", data,
                              "--metric", "cosine", "--out", tmp_path / "t.txt")
        assert code == 1
        assert "zero-norm" in err
        assert out == ""

    def test_test_data_mode_writes_test_format(self, tmp_path, capsys):
        train_csv = _moons_csv(tmp_path, 30, 0, "train.csv")
        test_csv = _moons_csv(tmp_path, 8, 1, "test.csv")
        out = tmp_path / "tt.txt"
        code, _, _ = _run(capsys, "gen-triplets", "--data", train_csv,
                          "--test-data", test_csv, "--proportion", 0.5,
                          "--seed", 1, "--out", out)
        assert code == 0
        assert out.read_text(encoding="utf-8").startswith(
            "testtriplets v1 n_test=8 n_train=30")


class TestTrainCommand:
    def test_pipeline_train_predict_evaluate(self, tmp_path, capsys):
        ds = make_moons(50, 0.1, 7)
        train_ds = ds.take(np.arange(40))
        test_ds = ds.take(np.arange(40, 50))
        train_csv, test_csv = tmp_path / "train.csv", tmp_path / "test.csv"
        save_csv(train_ds, train_csv)
        save_csv(test_ds, test_csv)
        triplets_path = tmp_path / "train.trp"
        model_path = tmp_path / "model.txt"
        test_trp = tmp_path / "test.trp"
        preds_csv = tmp_path / "preds.csv"

        code, _, _ = _run(capsys, "gen-triplets", "--data", train_csv,
                          "--proportion", 0.5, "--seed", 5,
                          "--out", triplets_path)
        assert code == 0
        code, out, _ = _run(capsys, "train", "--data", train_csv,
                            "--triplets", triplets_path, "--rounds", 300,
                            "--seed", 2, "--out-model", model_path,
                            "--stats-every", 100)
        assert code == 0
        checkpoints = [line for line in out.splitlines()
                       if line.startswith("checkpoint ")]
        assert len(checkpoints) == 3
        for line in checkpoints:
            fields = dict(part.split("=") for part in line.split()[1:])
            assert float(fields["train_error"]) <= float(fields["bound"]) + 1e-12

        code, _, _ = _run(capsys, "gen-triplets", "--data", train_csv,
                          "--test-data", test_csv, "--proportion", 0.5,
                          "--seed", 6, "--out", test_trp)
        assert code == 0
        code, out, _ = _run(capsys, "predict", "--model", model_path,
                            "--test-triplets", test_trp, "--policy",
                            "fixed_lowest", "--out", preds_csv)
        assert code == 0
        lines = preds_csv.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("example_id,label,abstained,score_0")
        assert len(lines) == 11

        code, out, _ = _run(capsys, "evaluate", "--model", model_path,
                            "--test-triplets", test_trp, "--labels", test_csv,
                            "--policy", "random", "--seed", 1, "--k", 2)
        assert code == 0
        values = dict(line.split("=", 1) for line in out.splitlines()
                      if "=" in line and not line.startswith("{"))
        assert 0.0 <= float(values["accuracy"]) <= 1.0
        assert float(values["recall_at_2"]) == 1.0  # k == L covers everything
        assert out.splitlines()[-1].startswith("{")

    def test_rounds_zero_rejected(self, tmp_path, capsys):
        data = _moons_csv(tmp_path)
        code, _, _ = _run(capsys, "gen-triplets", "--data", data,
                          "--out", tmp_path / "t.txt")
        assert code == 0
        code, _, err = _run(capsys, "train", "--data", data,
                            "--triplets", tmp_path / "t.txt", "--rounds", 0,
                            "--out-model", tmp_path / "m.txt")
        assert code == 1
        assert "rounds" in err

    def test_identical_flags_identical_model_bytes(self, tmp_path, capsys):
        data = _moons_csv(tmp_path)
        trp = tmp_path / "t.txt"
        _run(capsys, "gen-triplets", "--data", data, "--proportion", 0.4,
             "--seed", 9, "--out", trp)
        m1, m2 = tmp_path / "m1.txt", tmp_path / "m2.txt"
        for path in (m1, m2):
            code, _, _ = _run(capsys, "train", "--data", data, "--triplets",
                              trp, "--rounds", 150, "--seed", 4,
                              "--out-model", path)
            assert code == 0
        assert m1.read_bytes() == m2.read_bytes()

    def test_universe_mismatch_rejected(self, tmp_path, capsys):
        data = _moons_csv(tmp_path, 30)
        other = _moons_csv(tmp_path, 20, 3, "other.csv")
        trp, model_path = tmp_path / "t.txt", tmp_path / "m.txt"
        _run(capsys, "gen-triplets", "--data", data, "--proportion", 0.3,
             "--out", trp)
        _run(capsys, "train", "--data", data, "--triplets", trp,
             "--rounds", 50, "--out-model", model_path)
        wrong_tt = tmp_path / "wrong.trp"
        _run(capsys, "gen-triplets", "--data", other, "--test-data", other,
             "--proportion", 0.3, "--out", wrong_tt)
        code, _, err = _run(capsys, "predict", "--model", model_path,
                            "--test-triplets", wrong_tt)
        assert code == 1
        assert "training universe" in err


class TestAddNoiseCommand:
    def test_swaps_and_round_trips(self, tmp_path, capsys):
        data = _moons_csv(tmp_path, 20)
        clean, noisy, restored = (tmp_path / n for n in ("c.txt", "n.txt", "r.txt"))
        _run(capsys, "gen-triplets", "--data", data, "--out", clean)
        code, _, _ = _run(capsys, "add-noise", "--triplets", clean,
                          "--rate", 1.0, "--seed", 2, "--out", noisy)
        assert code == 0
        assert noisy.read_bytes() != clean.read_bytes()
        code, _, _ = _run(capsys, "add-noise", "--triplets", noisy,
                          "--rate", 1.0, "--seed", 2, "--out", restored)
        assert code == 0
        assert restored.read_bytes() == clean.read_bytes()


class TestRatingsCommand:
    def test_generation_from_ratings_file(self, tmp_path, capsys):
        ratings = tmp_path / "ratings.txt"
        ratings.write_text("7 0 5\n7 1 5\n7 2 1\n", encoding="utf-8")
        out = tmp_path / "t.txt"
        code, _, _ = _run(capsys, "gen-triplets-ratings", "--ratings", ratings,
                          "--out", out)
        assert code == 0
        text = out.read_text(encoding="utf-8")
        assert text.splitlines()[0] == "tripletset v1 n=3 m=2"


class TestBoundCommands:
    def test_bound_closed_form(self, capsys):
        code, out, _ = _run(capsys, "bound", "--n", 10, "--p", 0.1,
                            "--classifiers", 5)
        assert code == 0
        assert "bound=0.7140" in out

    def test_bound_exponent_parameterization(self, capsys):
        code, out, _ = _run(capsys, "bound", "--n", 100, "--k", 1.5,
                            "--beta", 2.0)
        assert code == 0
        assert "bound=" in out

    def test_simulate_agrees(self, capsys):
        code, out, _ = _run(capsys, "simulate-abstention", "--n", 10,
                            "--p", 0.1, "--classifiers", 5,
                            "--trials", 20000, "--seed", 3)
        assert code == 0
        values = dict(part.split("=") for part in out.split())
        assert abs(float(values["estimate"]) - float(values["bound"])) <= \
            3.5 * float(values["stderr"])

    def test_surface_csv(self, tmp_path, capsys):
        out = tmp_path / "surface.csv"
        code, _, _ = _run(capsys, "bound-surface", "--n", 100,
                          "--k-grid", "0:2.5:6", "--beta-grid", "0,1,2",
                          "--out", out)
        assert code == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "k,beta,bound"
        assert len(lines) == 19

    def test_limit_value(self, capsys):
        import math
        code, out, _ = _run(capsys, "bound-limit", "--k", 1.5, "--beta", 2.0)
        assert code == 0
        assert f"limit={math.exp(-2.0)!r}" in out


class TestExperimentCommand:
    def test_one_by_one_grid(self, tmp_path, capsys):
        spec = tmp_path / "spec.txt"
        spec.write_text(
            "data=moons\nmoons_n=40\nmoons_noise=0.1\nmetric=euclidean\n"
            "proportions=0.3\nnoises=0.0\nrounds=100\nrepetitions=1\n"
            f"seed=5\nout={tmp_path / 'results'}\ntest_fraction=0.25\n",
            encoding="utf-8")
        code, _, _ = _run(capsys, "experiment", "--spec", spec)
        assert code == 0
        lines = (tmp_path / "results" / "results.csv").read_text(
            encoding="utf-8").splitlines()
        assert lines[0] == "metric,proportion,noise,seed,accuracy,abstention_rate"
        assert len(lines) == 2

    def test_row_count_matches_grid(self, tmp_path, capsys):
        spec = tmp_path / "spec.txt"
        spec.write_text(
            "data=moons\nmoons_n=24\nmetric=euclidean\n"
            "proportions=0.2,0.4\nnoises=0.0,0.1\nrounds=40\nrepetitions=2\n"
            f"seed=1\nout={tmp_path / 'res'}\n",
            encoding="utf-8")
        code, _, _ = _run(capsys, "experiment", "--spec", spec)
        assert code == 0
        lines = (tmp_path / "res" / "results.csv").read_text(
            encoding="utf-8").splitlines()
        assert len(lines) == 1 + 2 * 2 * 2


class TestEntryPoint:
    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-m", "tripletboost.cli",
                               "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "gen-triplets" in proc.stdout
