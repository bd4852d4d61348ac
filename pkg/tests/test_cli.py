import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from ffagent.cli import main
from ffagent.config import load_config
from ffagent.qnet import QNetwork, load_weights
from ffagent.stream import load_dataset
from ffagent.trainer import TrainingLog

SMOKE = str(Path(__file__).resolve().parents[1] / "configs" / "smoke.toml")


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["generate", "-c", SMOKE, "--out", str(root / "data")]) == 0
    assert main(["train", "-c", SMOKE, "--data", str(root / "data"), "--out", str(root / "w.bin")]) == 0
    return root


def test_generate_manifest(workspace):
    manifest = json.loads((workspace / "data" / "manifest.json").read_text())
    assert len(manifest["videos"]) == 5
    assert len(load_dataset(workspace / "data")) == 5


def test_generate_is_deterministic(workspace, tmp_path):
    assert main(["generate", "-c", SMOKE, "--out", str(tmp_path / "again")]) == 0
    for f in sorted((workspace / "data").iterdir()):
        assert f.read_bytes() == (tmp_path / "again" / f.name).read_bytes()


def test_train_log_one_row_per_update(workspace):
    log = TrainingLog.read_csv(workspace / "w.bin.log.csv")
    assert len(log) > 0
    assert [r.epsilon for r in log.records] == [max(1 - k * 0.01, 0.1) for k in range(len(log))]


def test_train_is_deterministic(workspace, tmp_path):
    assert main(["train", "-c", SMOKE, "--data", str(workspace / "data"), "--out", str(tmp_path / "w.bin")]) == 0
    assert (tmp_path / "w.bin").read_bytes() == (workspace / "w.bin").read_bytes()


def test_zero_epochs_gives_seeded_init(workspace, tmp_path):
    out = tmp_path / "w0.bin"
    assert main(["train", "-c", SMOKE, "--set", "training.epochs=0", "--data", str(workspace / "data"),
                 "--out", str(out)]) == 0
    init = QNetwork(load_config(SMOKE).qnet_config(8))
    assert all(np.array_equal(a, b) for a, b in zip(load_weights(out).params, init.params))
    assert len(TrainingLog.read_csv(tmp_path / "w0.bin.log.csv")) == 0


def _run(capsys, workspace, *extra):
    feats = workspace / "data" / "synthetic_000.features.csv"
    assert main(["run", "-c", SMOKE, "--weights", str(workspace / "w.bin"), "--features", str(feats), *extra]) == 0
    return json.loads(capsys.readouterr().out)


def test_run_json(capsys, workspace):
    out = _run(capsys, workspace)
    assert set(out) == {"processed", "presented", "actions", "processing_percentage"}
    assert out["processing_percentage"] == pytest.approx(100 * len(out["processed"]) / 120)
    assert set(out["processed"]) <= set(out["presented"])


def test_run_zero_halfwidth(capsys, workspace):
    out = _run(capsys, workspace, "--halfwidth", "0")
    assert out["presented"] == out["processed"]


def test_compare_csv(capsys, workspace, tmp_path):
    args = ["compare", "-c", SMOKE, "--data", str(workspace / "data"), "--weights", str(workspace / "w.bin")]
    assert main(args) == 0
    text = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(text)))
    assert {r["method"] for r in rows} == {"ffnet", "uniform", "random", "online_kmeans"}
    assert all(0.0 <= float(r["mean_coverage"]) <= 1.0 for r in rows)
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text() == text


class TestExitCodes:
    def test_unknown_config_key(self, tmp_path):
        assert main(["generate", "-c", SMOKE, "--set", "synthetic.bogus=1", "--out", str(tmp_path)]) == 2

    def test_malformed_config_file(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[synthetic\n")
        assert main(["generate", "-c", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_missing_dataset(self, tmp_path):
        assert main(["train", "-c", SMOKE, "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "w")]) == 3

    def test_dimension_mismatch(self, workspace, tmp_path):
        feats = tmp_path / "f.csv"
        feats.write_text("1,2,3\n4,5,6\n")
        assert main(["run", "-c", SMOKE, "--weights", str(workspace / "w.bin"), "--features", str(feats)]) == 3

    def test_corrupt_weights(self, workspace, tmp_path):
        bad = tmp_path / "w.bin"
        bad.write_bytes((workspace / "w.bin").read_bytes()[:40])
        feats = workspace / "data" / "synthetic_000.features.csv"
        assert main(["run", "-c", SMOKE, "--weights", str(bad), "--features", str(feats)]) == 3

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_numeric_failure(self, workspace, tmp_path):
        code = main(["train", "-c", SMOKE, "--set", "qnet.learning_rate=1e6", "--set", "training.epochs=200",
                     "--data", str(workspace / "data"), "--out", str(tmp_path / "w.bin")])
        assert code == 4
