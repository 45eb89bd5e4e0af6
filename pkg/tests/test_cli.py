import csv
import json

import numpy as np
import pytest

from scengen import (CategoricalHmm, average_da, load_dataset, load_model,
                     random_stiefel, save_model, validate_kraus)
from scengen.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def read_data_files(directory):
    """Data outputs only; manifests carry timestamps and are excluded."""
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())
            if p.name != "manifest.json"}


@pytest.fixture
def system_path(ref_system, tmp_path):
    path = tmp_path / "system.json"
    ref_system.save(path)
    return path


@pytest.fixture
def dataset_dir(system_path, tmp_path):
    out = tmp_path / "data"
    assert run("make-dataset", "--system", system_path, "--out", out, "--seed", 0) == 0
    return out


def train_small(dataset_dir, out, kind="qhmm", epochs=5, seed=0, **extra):
    argv = ["train", "--kind", kind, "--data", dataset_dir / "probable.jsonl",
            "--out", out, "--K", 2, "--epochs", epochs, "--seed", seed]
    for flag, value in extra.items():
        argv += [f"--{flag}", value]
    return run(*argv)


class TestMakeDataset:
    def test_writes_both_classes_and_manifest(self, dataset_dir):
        probable = load_dataset(dataset_dir / "probable.jsonl")
        no_probable = load_dataset(dataset_dir / "no_probable.jsonl")
        assert len(probable.records) == 8 and len(no_probable.records) == 8
        manifest = json.loads((dataset_dir / "manifest.json").read_text())
        assert manifest["command"] == "make-dataset"
        assert manifest["seed"] == 0

    def test_missing_system_exits_two(self, tmp_path, capsys):
        code = run("make-dataset", "--system", tmp_path / "nope.json",
                   "--out", tmp_path / "out", "--seed", 0)
        assert code == 2
        assert "nope.json" in capsys.readouterr().err

    def test_empty_class_exits_nonzero(self, system_path, tmp_path):
        code = run("make-dataset", "--system", system_path, "--out",
                   tmp_path / "out", "--max-len", 2, "--seed", 0)
        assert code == 1

    def test_reruns_are_byte_identical(self, system_path, tmp_path):
        for out in ("a", "b"):
            assert run("make-dataset", "--system", system_path,
                       "--out", tmp_path / out, "--seed", 7) == 0
        assert read_data_files(tmp_path / "a") == read_data_files(tmp_path / "b")


class TestTrain:
    def test_qhmm_model_validates(self, dataset_dir, tmp_path):
        out = tmp_path / "model"
        assert train_small(dataset_dir, out) == 0
        model = load_model(out / "model.json")
        assert validate_kraus(model).passes
        with open(out / "loss.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["epoch", "batch", "loss", "tau"]
        assert len(rows) > 1

    def test_zero_epochs_returns_seeded_initialization(self, dataset_dir, tmp_path):
        out = tmp_path / "model"
        assert train_small(dataset_dir, out, epochs=0, seed=3) == 0
        model = load_model(out / "model.json")
        want = random_stiefel(6 * 1 * 2, 2, 3).matrix
        np.testing.assert_array_equal(model.to_stiefel(), want)

    def test_hmm_model_is_stochastic(self, dataset_dir, tmp_path):
        out = tmp_path / "model"
        assert train_small(dataset_dir, out, kind="hmm", epochs=20) == 0
        model = load_model(out / "model.json")
        assert isinstance(model, CategoricalHmm)
        np.testing.assert_allclose(model.transition.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(model.emission.sum(axis=1), 1.0, atol=1e-9)

    def test_reruns_are_byte_identical(self, dataset_dir, tmp_path):
        for out in ("a", "b"):
            assert train_small(dataset_dir, tmp_path / out, seed=11) == 0
        assert read_data_files(tmp_path / "a") == read_data_files(tmp_path / "b")

    def test_missing_data_exits_two(self, tmp_path):
        assert train_small(tmp_path / "missing", tmp_path / "out") == 2


class TestEval:
    def test_mean_matches_library_recomputation(self, dataset_dir, tmp_path, capsys):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        out = tmp_path / "eval"
        assert run("eval", "--model", model_dir / "model.json",
                   "--data", dataset_dir / "probable.jsonl",
                   "--out", out, "--split", "test") == 0
        printed = capsys.readouterr().out.strip().splitlines()[-1]
        assert printed.startswith("mean_da ")
        mean = float(printed.split()[1])
        model = load_model(model_dir / "model.json")
        data = load_dataset(dataset_dir / "probable.jsonl")
        assert mean == pytest.approx(average_da(model, data.sequences("test")),
                                     abs=1e-12)
        with open(out / "report.csv", newline="") as fh:
            assert next(csv.reader(fh)) == ["sequence_id", "length", "log_prob", "da"]

    def test_empty_data_exits_two(self, dataset_dir, tmp_path):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert run("eval", "--model", model_dir / "model.json",
                   "--data", empty, "--out", tmp_path / "eval") == 2

    def test_alphabet_mismatch_exits_two(self, tmp_path):
        model_path = tmp_path / "hmm.json"
        save_model(CategoricalHmm([[1.0]], [[0.5, 0.5]], [1.0]), model_path)
        data = tmp_path / "data.jsonl"
        data.write_text('{"sequence": [0, 5]}\n')
        assert run("eval", "--model", model_path, "--data", data,
                   "--out", tmp_path / "eval") == 2


class TestGenerate:
    def test_zero_count_writes_empty_file(self, dataset_dir, tmp_path):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        out = tmp_path / "gen"
        assert run("generate", "--model", model_dir / "model.json", "--out", out,
                   "--count", 0, "--length", 4, "--seed", 0) == 0
        assert (out / "sequences.jsonl").read_text() == ""

    def test_seeded_reruns_are_byte_identical(self, dataset_dir, tmp_path):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        for out in ("a", "b"):
            assert run("generate", "--model", model_dir / "model.json",
                       "--out", tmp_path / out, "--count", 5, "--length", 6,
                       "--seed", 2) == 0
        assert read_data_files(tmp_path / "a") == read_data_files(tmp_path / "b")

    def test_prefix_and_decoding(self, dataset_dir, system_path, tmp_path):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        out = tmp_path / "gen"
        assert run("generate", "--model", model_dir / "model.json", "--out", out,
                   "--count", 8, "--length", 3, "--seed", 1,
                   "--prefix", "0", "--system", system_path) == 0
        lines = (out / "sequences.jsonl").read_text().strip().splitlines()
        assert len(lines) == 8
        for line in lines:
            record = json.loads(line)
            assert len(record["sequence"]) == 3
            assert "steps" in record

    def test_continuations_decode_from_the_post_prefix_state(self, system_path,
                                                             tmp_path):
        # a one-state model over the 6-symbol alphabet that only emits
        # fail-A or repair-A, so continuations of prefix [fail A] that
        # start with repair-A are legal walks from the prefixed state
        model_path = tmp_path / "hmm.json"
        save_model(CategoricalHmm([[1.0]], [[0.5, 0.5, 0, 0, 0, 0]], [1.0]),
                   model_path)
        out = tmp_path / "gen"
        assert run("generate", "--model", model_path, "--out", out,
                   "--count", 8, "--length", 2, "--seed", 0,
                   "--prefix", "0", "--system", system_path) == 0
        records = [json.loads(line) for line in
                   (out / "sequences.jsonl").read_text().strip().splitlines()]

        def legal_from_prefixed_state(sequence):
            state = 0b001  # the prefix [fail A] leaves event A down
            for symbol in sequence:
                bit = 1 << (symbol // 2)
                if bool(state & bit) != bool(symbol % 2):
                    return False
                state ^= bit
            return True

        assert any(r["steps"] is not None for r in records)
        assert any(r["steps"] is None for r in records)
        for record in records:
            expect = legal_from_prefixed_state(record["sequence"])
            assert (record["steps"] is not None) == expect
            if record["steps"] is not None and record["sequence"][0] == 1:
                assert record["steps"][0] == ["A", "repair"]

    def test_symbols_stay_in_alphabet(self, dataset_dir, tmp_path):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        out = tmp_path / "gen"
        assert run("generate", "--model", model_dir / "model.json", "--out", out,
                   "--count", 10, "--length", 5, "--seed", 3) == 0
        for line in (out / "sequences.jsonl").read_text().strip().splitlines():
            assert all(0 <= s < 6 for s in json.loads(line)["sequence"])


class TestClassify:
    def test_identical_models_predict_no_probable(self, dataset_dir, tmp_path, capsys):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        out = tmp_path / "clf"
        assert run("classify", "--model-probable", model_dir / "model.json",
                   "--model-no-probable", model_dir / "model.json",
                   "--data", dataset_dir / "no_probable.jsonl", "--out", out) == 0
        printed = capsys.readouterr().out
        assert "accuracy 1.0" in printed
        with open(out / "report.csv", newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        assert all(row[2] == "no_probable" for row in rows)

    def test_unlabeled_data_reports_without_accuracy(self, dataset_dir, tmp_path,
                                                     capsys):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        gen = tmp_path / "gen"
        run("generate", "--model", model_dir / "model.json", "--out", gen,
            "--count", 3, "--length", 4, "--seed", 0)
        out = tmp_path / "clf"
        assert run("classify", "--model-probable", model_dir / "model.json",
                   "--model-no-probable", model_dir / "model.json",
                   "--data", gen / "sequences.jsonl", "--out", out) == 0
        assert "accuracy" not in capsys.readouterr().out

    def test_alphabet_mismatch_exits_two(self, dataset_dir, tmp_path):
        model_dir = tmp_path / "model"
        train_small(dataset_dir, model_dir)
        other = tmp_path / "hmm.json"
        save_model(CategoricalHmm([[1.0]], [[0.5, 0.5]], [1.0]), other)
        assert run("classify", "--model-probable", model_dir / "model.json",
                   "--model-no-probable", other,
                   "--data", dataset_dir / "probable.jsonl",
                   "--out", tmp_path / "clf") == 2


class TestCompare:
    def test_row_arithmetic_and_std(self, dataset_dir, tmp_path):
        out = tmp_path / "cmp"
        assert run("compare", "--data", dataset_dir / "probable.jsonl",
                   "--out", out, "--K", 2, "--epochs", 3, "--seeds", "0,1") == 0
        with open(out / "comparison.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["dataset", "model_kind", "split", "mean_da", "std_da"]
        assert len(rows) == 5
        kinds_splits = [(r[1], r[2]) for r in rows[1:]]
        assert kinds_splits == [("hmm", "train"), ("hmm", "test"),
                                ("qhmm", "train"), ("qhmm", "test")]
        for row in rows[1:]:
            float(row[3])
            float(row[4])

    def test_two_datasets_give_eight_rows(self, dataset_dir, tmp_path):
        out = tmp_path / "cmp"
        assert run("compare", "--data", dataset_dir / "probable.jsonl",
                   "--data", dataset_dir / "no_probable.jsonl",
                   "--out", out, "--K", 2, "--epochs", 2, "--seeds", "0") == 0
        with open(out / "comparison.csv", newline="") as fh:
            assert len(list(csv.reader(fh))) == 9

    def test_reruns_are_byte_identical(self, dataset_dir, tmp_path):
        for out in ("a", "b"):
            assert run("compare", "--data", dataset_dir / "probable.jsonl",
                       "--out", tmp_path / out, "--K", 2, "--epochs", 2,
                       "--seeds", "0,1") == 0
        assert read_data_files(tmp_path / "a") == read_data_files(tmp_path / "b")


class TestUsage:
    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
