"""评估流程、报告文件与定性对比图测试。"""

import csv
import json
from pathlib import Path

import pytest
import torch
from PIL import Image
from pydantic import ValidationError

from thermcal.core.errors import CheckpointLoadError, EmptyDatasetError
from thermcal.models import EVAL_FORMAT, DatasetManifest, EvalRecord, EvalReport
from thermcal.services.checkpoint import (
    read_metadata,
    resolve_checkpoint,
    write_self_test_checkpoint,
)
from thermcal.services.evaluation import (
    EVAL_JSON,
    EVAL_SAMPLES_CSV,
    Translator,
    evaluate,
    grid_samples,
    paired_rows,
    qualitative_grid,
    write_eval_report,
)
from thermcal.services.training import CycleTrainer


@pytest.fixture
def self_test_ckpt(tmp_path: Path) -> Path:
    return write_self_test_checkpoint(tmp_path / "self_test", res_a=(16, 16))


class TestSelfTest:
    def test_perfect_scores(self, self_test_ckpt, tiny_manifest):
        report = evaluate(self_test_ckpt, tiny_manifest, split="test")
        assert report.n == 1
        assert report.avg_ssim == pytest.approx(1.0, abs=1e-6)
        assert report.avg_l_phi == pytest.approx(0.0, abs=1e-6)
        assert report.summary_line() == "avg_ssim=1.0000 avg_l_phi=0.0000"

    def test_perfect_on_every_split(self, self_test_ckpt, tiny_manifest):
        report = evaluate(self_test_ckpt, tiny_manifest, split="train")
        assert report.n == 6
        assert all(r.ssim == pytest.approx(1.0, abs=1e-6) for r in report.records)

    def test_metadata(self, self_test_ckpt):
        meta = read_metadata(self_test_ckpt)
        assert meta.kind == "self_test"
        assert meta.train_config.res_b == (32, 32)


class TestPairing:
    def test_missing_reference_is_skipped(self, tiny_manifest):
        rows = tuple(
            r for r in tiny_manifest.rows if not (r.domain == "B" and r.split == "train")
        )
        rows += tuple(r for r in tiny_manifest.rows if r.domain == "B" and r.split == "train")[:4]
        manifest = DatasetManifest(rows=rows)
        pairs, skipped = paired_rows(manifest, "train")
        assert len(pairs) == 4
        assert skipped == 2

    def test_no_pairs(self, tiny_manifest):
        rows = tuple(r for r in tiny_manifest.rows if r.domain == "A")
        with pytest.raises(EmptyDatasetError):
            paired_rows(DatasetManifest(rows=rows), "test")


class TestReport:
    def test_aggregates_must_match_records(self):
        records = [EvalRecord(id="a", ssim=0.5, l_phi=0.2)]
        with pytest.raises(ValidationError):
            EvalReport(records=records, avg_ssim=0.4, avg_l_phi=0.2, n=1)

    def test_averages_are_permutation_invariant(self):
        records = [EvalRecord(id=str(i), ssim=i / 10, l_phi=1 - i / 10) for i in range(5)]
        forward = EvalReport.from_records(records)
        backward = EvalReport.from_records(list(reversed(records)))
        assert forward.avg_ssim == pytest.approx(backward.avg_ssim)
        assert forward.avg_ssim == pytest.approx(0.2)

    def test_files(self, tmp_path: Path):
        records = [
            EvalRecord(id="s1_A", ssim=0.5, l_phi=0.25),
            EvalRecord(id="s2_A", ssim=0.75, l_phi=0.5),
        ]
        report = EvalReport.from_records(records, skipped=1)
        json_path, csv_path = write_eval_report(report, tmp_path / "eval")
        assert json_path.name == EVAL_JSON and csv_path.name == EVAL_SAMPLES_CSV
        data = json.loads(json_path.read_text(encoding="utf-8"))
        assert data == {
            "format": EVAL_FORMAT,
            "avg_ssim": 0.625,
            "avg_l_phi": 0.375,
            "n": 2,
            "skipped": 1,
        }
        with csv_path.open(encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["id", "ssim", "l_phi"]
        assert rows[1] == ["s1_A", "0.5", "0.25"]


class TestGrid:
    def test_layout(self, self_test_ckpt, tiny_manifest, tmp_path: Path):
        samples = grid_samples(tiny_manifest, read_metadata(self_test_ckpt), "train", limit=4)
        path = qualitative_grid(self_test_ckpt, samples, tmp_path / "grid.png")
        with Image.open(path) as img:
            # 每个图块 32x32，四周 2 像素间隔
            assert img.size == (4 * 34 + 2, 4 * 34 + 2)
            assert img.text["columns"] == "input_rgb,input_ir,output,reference_ir"
            assert img.text["rows"] == "4"

    def test_single_row_and_byte_stable(self, self_test_ckpt, tiny_manifest, tmp_path: Path):
        samples = grid_samples(tiny_manifest, read_metadata(self_test_ckpt), "test", limit=4)
        first = qualitative_grid(self_test_ckpt, samples, tmp_path / "one.png")
        second = qualitative_grid(self_test_ckpt, samples, tmp_path / "two.png")
        with Image.open(first) as img:
            assert img.size == (4 * 34 + 2, 34 + 2)
        assert first.read_bytes() == second.read_bytes()

    def test_requires_samples(self, self_test_ckpt, tmp_path: Path):
        with pytest.raises(ValueError):
            qualitative_grid(self_test_ckpt, [], tmp_path / "grid.png")


class TestTranslator:
    def test_trained_checkpoint(self, tiny_config, tmp_path: Path):
        ckpt = CycleTrainer(tiny_config).save(tmp_path / "ckpt")
        translator = Translator(ckpt, "cpu")
        out = translator(torch.rand(3, 20, 24))
        assert out.shape == (3, 40, 48)
        assert out.min() >= 0 and out.max() <= 1

    def test_resolve_accepts_run_directory(self, tiny_config, tmp_path: Path):
        CycleTrainer(tiny_config).save(tmp_path / "run" / "checkpoints")
        assert resolve_checkpoint(tmp_path / "run").name == "step_0"
        assert resolve_checkpoint(tmp_path / "run" / "checkpoints").name == "step_0"

    def test_missing_checkpoint(self, tmp_path: Path):
        with pytest.raises(CheckpointLoadError):
            Translator(resolve_checkpoint(tmp_path / "nothing"))

    def test_corrupt_metadata(self, self_test_ckpt):
        (self_test_ckpt / "metadata.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(CheckpointLoadError):
            read_metadata(self_test_ckpt)
