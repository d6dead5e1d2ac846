import json
import subprocess
import sys

import pytest

from archprobe.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthesized train/test corpora shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    assert run_cli(
        "synth", "--classes", 6, "--per-class", 6, "--seed", 5, "--out", root / "train"
    ) == 0
    assert run_cli(
        "synth", "--classes", 6, "--per-class", 3, "--seed", 5, "--role", "test",
        "--rep-offset", 6, "--out", root / "test",
    ) == 0
    return root


class TestParseCommand:
    def test_fixture_to_json(self, quadro_log, tmp_path, capsys):
        out = tmp_path / "profile.json"
        assert run_cli("parse", quadro_log, "--out", out) == 0
        doc = json.loads(out.read_text())
        conv = next(
            k for k in doc["kernels"] if k["name"] == "cudnn::detail::implicit_convolve"
        )
        assert conv["calls"] == 370

    def test_missing_file_is_input_error(self, capsys):
        assert run_cli("parse", "/no/such/file.csv") == 1
        assert "/no/such/file.csv" in capsys.readouterr().err

    def test_malformed_log_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text(
            '==1== x\n"Type","Time(%)","Time","Calls","Avg","Min","Max","Name"\n'
            '"GPU activities",1.0,1.0\n'
        )
        assert run_cli("parse", bad) == 1
        assert "line 3" in capsys.readouterr().err


class TestTrainPredictEval:
    def test_train_then_predict_training_profile(self, workspace, tmp_path):
        model = tmp_path / "model.json"
        assert run_cli(
            "train", "--manifest", workspace / "train" / "manifest.json",
            "--out", model, "--predictor", "knn", "--seed", 5,
        ) == 0
        manifest = json.loads((workspace / "train" / "manifest.json").read_text())
        entry = manifest["profiles"][0]
        out = tmp_path / "pred.txt"
        assert run_cli(
            "predict", "--model", model, "--log", workspace / "train" / entry["path"],
            "--top-k", 3, "--out", out,
        ) == 0
        first_label = out.read_text().splitlines()[0].split("\t")[0]
        assert first_label == entry["label"]

    def test_eval_perfect_on_separable_corpus(self, workspace, tmp_path):
        model = tmp_path / "model.json"
        report = tmp_path / "report.json"
        assert run_cli(
            "train", "--manifest", workspace / "train" / "manifest.json",
            "--out", model, "--predictor", "knn", "--seed", 5,
        ) == 0
        assert run_cli(
            "eval", "--model", model, "--manifest", workspace / "test" / "manifest.json",
            "--out", report, "--csv", tmp_path / "report.csv",
        ) == 0
        doc = json.loads(report.read_text())
        assert doc["top1"] == 1.0
        assert doc["config_digest"]
        assert "__overall__" in (tmp_path / "report.csv").read_text()

    def test_rfe_exports_ranking(self, workspace, tmp_path):
        out = tmp_path / "ranking.json"
        assert run_cli(
            "rfe", "--manifest", workspace / "train" / "manifest.json",
            "--out", out, "--groups", "gpu_kernel", "--exclude-memory",
            "--rfe-estimator", "random_forest", "--rfe-step", "0.3",
            "--trees", 15, "--seed", 5,
        ) == 0
        doc = json.loads(out.read_text())
        assert doc["rounds"]
        assert doc["config_digest"]
        assert len(doc["ranking"]) >= 200


class TestTraceCommand:
    def test_graph_and_code_outputs(self, fixture_dir, tmp_path):
        graph_out = tmp_path / "graph.json"
        code_out = tmp_path / "net.py"
        assert run_cli(
            "trace", fixture_dir / "trace_sequential.json",
            "--out", graph_out, "--code", code_out,
        ) == 0
        doc = json.loads(graph_out.read_text())
        assert [l["type"] for l in doc["layers"]][:2] == ["conv2d", "batch_norm2d"]
        assert "nn.Conv2d(3, 64" in code_out.read_text()


class TestDeterminism:
    def test_train_byte_identical_across_runs_and_workers(self, workspace, tmp_path):
        outs = []
        for name, workers in (("a", 1), ("b", 1), ("c", 3)):
            out = tmp_path / f"model_{name}.json"
            assert run_cli(
                "train", "--manifest", workspace / "train" / "manifest.json",
                "--out", out, "--predictor", "random_forest", "--trees", 20,
                "--seed", 9, "--workers", workers,
            ) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_eval_byte_identical(self, workspace, tmp_path):
        model = tmp_path / "model.json"
        run_cli(
            "train", "--manifest", workspace / "train" / "manifest.json",
            "--out", model, "--predictor", "random_forest", "--trees", 20, "--seed", 9,
        )
        reports = []
        for name in ("r1", "r2"):
            out = tmp_path / f"{name}.json"
            assert run_cli(
                "eval", "--model", model,
                "--manifest", workspace / "test" / "manifest.json", "--out", out,
            ) == 0
            reports.append(out.read_bytes())
        assert reports[0] == reports[1]

    def test_subprocess_run_matches_in_process(self, workspace, tmp_path):
        out = tmp_path / "model_sub.json"
        result = subprocess.run(
            [sys.executable, "-m", "archprobe.cli", "train",
             "--manifest", str(workspace / "train" / "manifest.json"),
             "--out", str(out), "--predictor", "random_forest", "--trees", "20",
             "--seed", "9"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        out2 = tmp_path / "model_inproc.json"
        run_cli(
            "train", "--manifest", workspace / "train" / "manifest.json",
            "--out", out2, "--predictor", "random_forest", "--trees", 20, "--seed", 9,
        )
        assert out.read_bytes() == out2.read_bytes()

    def test_synth_manifest_embeds_config_digest(self, workspace):
        doc = json.loads((workspace / "train" / "manifest.json").read_text())
        assert doc["config_digest"]


class TestExitCodes:
    def test_internal_error_is_exit_2(self, tmp_path, workspace):
        # a directory where a model file is expected triggers an OS-level
        # error past input validation
        assert run_cli(
            "predict", "--model", tmp_path, "--log",
            workspace / "train" / "manifest.json",
        ) in (1, 2)
        bad_model = tmp_path / "bad_model.json"
        bad_model.write_text('{"version": 1}')
        code = run_cli(
            "eval", "--model", bad_model,
            "--manifest", workspace / "test" / "manifest.json",
        )
        assert code == 2

    def test_failed_output_never_partial(self, workspace, tmp_path, monkeypatch):
        out = tmp_path / "never" / "model.json"
        assert run_cli(
            "train", "--manifest", tmp_path / "missing.json", "--out", out,
        ) == 1
        assert not out.exists()
