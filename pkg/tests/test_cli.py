"""End-to-end CLI coverage: gen -> train -> infer -> eval on a small corpus,
plus config files and exit codes (0 success, 1 validation, 2 I/O)."""

import dataclasses
import json

import pytest

from iterdelex.cli import main
from iterdelex.corpus import SlotLabel
from iterdelex.loglinear import LogLinearBackend
from iterdelex.synth import default_spec, save_spec


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A spec file, generated corpus, and trained model shared by the tests."""
    root = tmp_path_factory.mktemp("cli")
    spec = dataclasses.replace(default_spec(), train_count=300, test_count=60)
    spec_path = root / "spec.json"
    save_spec(spec, spec_path)
    assert main(["gen", "--spec", str(spec_path), "--seed", "7",
                 "--out", str(root / "data")]) == 0
    assert main(["train", "--data", str(root / "data" / "train.jsonl"),
                 "--out", str(root / "run")]) == 0
    return {
        "root": root,
        "spec": spec_path,
        "train": root / "data" / "train.jsonl",
        "test": root / "data" / "test.jsonl",
        "model": root / "run" / "model.json",
        "gazetteer": root / "run" / "gazetteer.tsv",
    }


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestGen:
    def test_outputs_both_splits(self, workspace):
        assert len(read_jsonl(workspace["train"])) == 300
        assert len(read_jsonl(workspace["test"])) == 60

    def test_deterministic(self, workspace, tmp_path, capsys):
        assert main(["gen", "--spec", str(workspace["spec"]), "--seed", "7",
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "train.jsonl").read_bytes() == workspace["train"].read_bytes()
        out = capsys.readouterr().out
        assert "message slot:" in out and "out-of-vocabulary" in out

    def test_seed_required(self, workspace, tmp_path, capsys):
        code = main(["gen", "--spec", str(workspace["spec"]), "--out", str(tmp_path)])
        assert code == 1
        assert "requires --seed" in capsys.readouterr().err

    def test_seed_from_config(self, workspace, tmp_path):
        cfg = tmp_path / "gen.cfg"
        cfg.write_text("seed = 7\n")
        assert main(["gen", "--spec", str(workspace["spec"]), "--config", str(cfg),
                     "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "train.jsonl").read_bytes() == workspace["train"].read_bytes()

    def test_missing_spec_file_is_io_error(self, tmp_path):
        assert main(["gen", "--spec", str(tmp_path / "nope.json"), "--seed", "1",
                     "--out", str(tmp_path)]) == 2


class TestTrain:
    def test_artifacts_written(self, workspace, capsys):
        assert workspace["model"].exists()
        assert workspace["gazetteer"].exists()
        LogLinearBackend.load(workspace["model"])  # parses cleanly

    def test_summary_printed(self, workspace, tmp_path, capsys):
        assert main(["train", "--data", str(workspace["train"]),
                     "--out", str(tmp_path / "run2")]) == 0
        out = capsys.readouterr().out
        assert "trained on 300 utterances" in out
        assert "model:" in out

    def test_reproducible_model_file(self, workspace, tmp_path):
        assert main(["train", "--data", str(workspace["train"]),
                     "--out", str(tmp_path / "again")]) == 0
        assert (tmp_path / "again" / "model.json").read_bytes() == workspace["model"].read_bytes()

    def test_unlabeled_data_rejected(self, tmp_path, capsys):
        data = tmp_path / "bad.jsonl"
        data.write_text('{"tokens": ["hi"]}\n')
        assert main(["train", "--data", str(data), "--out", str(tmp_path / "run")]) == 1
        assert "labels and intents" in capsys.readouterr().err

    def test_missing_data_is_io_error(self, tmp_path):
        assert main(["train", "--data", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "run")]) == 2


def infer_args(ws, output, extra=()):
    return [
        "infer",
        "--model", str(ws["model"]),
        "--gazetteer", str(ws["gazetteer"]),
        "--input", str(ws["test"]),
        "--output", str(output),
        *extra,
    ]


class TestInfer:
    def test_engine_predictions_shape(self, workspace, tmp_path):
        out = tmp_path / "pred.jsonl"
        assert main(infer_args(workspace, out, ["--ood-slots", "message"])) == 0
        rows = read_jsonl(out)
        assert len(rows) == 60
        for row in rows:
            assert set(row) == {"tokens", "intent", "labels", "delexicalized",
                                "iterations", "candidates"}
            assert len(row["labels"]) == len(row["tokens"])
            for lab in row["labels"]:
                SlotLabel.parse(lab)  # well-formed BIO strings
            assert row["iterations"] >= 0
            assert row["candidates"] >= 1

    def test_baseline_mode(self, workspace, tmp_path):
        out = tmp_path / "base.jsonl"
        assert main(infer_args(workspace, out, ["--baseline"])) == 0
        for row in read_jsonl(out):
            assert row["delexicalized"] == row["tokens"]
            assert row["iterations"] == 0
            assert row["candidates"] == 1

    def test_trace_written(self, workspace, tmp_path):
        out = tmp_path / "pred.jsonl"
        trace = tmp_path / "trace.txt"
        assert main(infer_args(workspace, out,
                               ["--trace", str(trace), "--ood-slots", "message"])) == 0
        text = trace.read_text()
        assert text.startswith("iter0\t")
        blocks = text.split("\n\n")
        assert len(blocks) == 60
        for line in blocks[0].splitlines():
            iter_part, score_part, provenance, tokens = line.split("\t")
            assert iter_part.startswith("iter")
            float(score_part)
            assert provenance in {"original", "seed", "proper_span",
                                  "improper_span", "expansion"}
            assert tokens

    def test_trace_incompatible_with_baseline(self, workspace, tmp_path, capsys):
        out = tmp_path / "pred.jsonl"
        code = main(infer_args(workspace, out,
                               ["--baseline", "--trace", str(tmp_path / "t.txt")]))
        assert code == 1
        assert "drop --baseline" in capsys.readouterr().err

    def test_unknown_ood_slot_rejected(self, workspace, tmp_path, capsys):
        out = tmp_path / "pred.jsonl"
        assert main(infer_args(workspace, out, ["--ood-slots", "bogus"])) == 1
        assert "bogus" in capsys.readouterr().err

    def test_foreign_placeholder_rejected(self, workspace, tmp_path, capsys):
        hacked = tmp_path / "gaz.tsv"
        hacked.write_text(
            workspace["gazetteer"].read_text() + "slot\tbrandnew\twidget\n"
        )
        code = main([
            "infer", "--model", str(workspace["model"]),
            "--gazetteer", str(hacked),
            "--input", str(workspace["test"]),
            "--output", str(tmp_path / "pred.jsonl"),
        ])
        assert code == 1
        assert "never seen by the model" in capsys.readouterr().err

    def test_missing_model_is_io_error(self, workspace, tmp_path):
        code = main([
            "infer", "--model", str(tmp_path / "nope.json"),
            "--gazetteer", str(workspace["gazetteer"]),
            "--input", str(workspace["test"]),
            "--output", str(tmp_path / "pred.jsonl"),
        ])
        assert code == 2


@pytest.fixture(scope="module")
def predictions(workspace, tmp_path_factory):
    out = tmp_path_factory.mktemp("eval") / "pred.jsonl"
    assert main(infer_args(workspace, out, ["--ood-slots", "message"])) == 0
    return out


class TestEval:
    def test_report_printed(self, workspace, predictions, capsys):
        assert main(["eval", "--gold", str(workspace["test"]),
                     "--pred", str(predictions)]) == 0
        out = capsys.readouterr().out
        assert "overall (micro)" in out
        assert "intent accuracy" in out
        assert "message" in out

    def test_categories_file(self, workspace, predictions, tmp_path, capsys):
        cats = tmp_path / "cats.txt"
        cats.write_text("message\ncontact\n")
        assert main(["eval", "--gold", str(workspace["test"]),
                     "--pred", str(predictions), "--categories", str(cats)]) == 0
        out = capsys.readouterr().out
        assert "message" in out and "contact" in out
        assert "city" not in out

    def test_empty_categories_rejected(self, workspace, predictions, tmp_path, capsys):
        cats = tmp_path / "cats.txt"
        cats.write_text("\n\n")
        assert main(["eval", "--gold", str(workspace["test"]),
                     "--pred", str(predictions), "--categories", str(cats)]) == 1
        assert "no category names" in capsys.readouterr().err

    def test_mismatched_files_rejected(self, workspace, predictions, capsys):
        assert main(["eval", "--gold", str(workspace["train"]),
                     "--pred", str(predictions)]) == 1


class TestConfigFiles:
    def test_values_used_as_defaults(self, workspace, tmp_path):
        cfg = tmp_path / "infer.cfg"
        cfg.write_text("# engine settings\nbaseline = yes\n")
        out = tmp_path / "pred.jsonl"
        assert main(infer_args(workspace, out, ["--config", str(cfg)])) == 0
        assert all(r["iterations"] == 0 for r in read_jsonl(out))

    def test_flags_override_config(self, workspace, tmp_path):
        cfg = tmp_path / "infer.cfg"
        cfg.write_text("k = 1\ntau = 0.9\nood_slots = message\n")
        out = tmp_path / "pred.jsonl"
        # flag --k 8 wins over config k = 1; config still supplies tau/ood
        assert main(infer_args(workspace, out, ["--config", str(cfg), "--k", "8"])) == 0

    def test_unknown_key_rejected(self, workspace, tmp_path, capsys):
        cfg = tmp_path / "infer.cfg"
        cfg.write_text("beam = 3\n")
        out = tmp_path / "pred.jsonl"
        assert main(infer_args(workspace, out, ["--config", str(cfg)])) == 1
        err = capsys.readouterr().err
        assert "unknown key 'beam'" in err
        assert "allowed:" in err

    def test_malformed_line_rejected(self, workspace, tmp_path, capsys):
        cfg = tmp_path / "infer.cfg"
        cfg.write_text("just some words\n")
        out = tmp_path / "pred.jsonl"
        assert main(infer_args(workspace, out, ["--config", str(cfg)])) == 1
        assert "expected 'key = value'" in capsys.readouterr().err

    def test_bad_value_rejected(self, workspace, tmp_path, capsys):
        cfg = tmp_path / "infer.cfg"
        cfg.write_text("tau = warm\n")
        out = tmp_path / "pred.jsonl"
        assert main(infer_args(workspace, out, ["--config", str(cfg)])) == 1
        assert "bad value for 'tau'" in capsys.readouterr().err

    def test_comments_and_blanks_ignored(self, workspace, tmp_path):
        cfg = tmp_path / "gen.cfg"
        cfg.write_text("# a comment\n\nseed = 3\n")
        assert main(["gen", "--spec", str(workspace["spec"]), "--config", str(cfg),
                     "--out", str(tmp_path / "out")]) == 0


class TestUsageErrors:
    def test_no_subcommand(self, capsys):
        assert main([]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_required_flag(self, capsys):
        assert main(["train", "--out", "/tmp/x"]) == 1
        assert "--data" in capsys.readouterr().err
