"""
桌面规模的端到端实验（数分钟）。

默认被 -m "not slow" 排除，用 `pytest -m slow` 显式运行。
固定数据：16 个 64x64 合成配对，批大小 4，学习率 0.0002。
"""

import json
from pathlib import Path

import pytest

from thermcal.models import GeneratorConfig, LossWeights, TrainConfig
from thermcal.services.dataset import load_manifest, load_sample
from thermcal.services.evaluation import evaluate, paired_rows
from thermcal.services.imaging import resize_to, ssim_map
from thermcal.services.synthetic import write_synthetic_dataset
from thermcal.services.training import CHECKPOINTS_DIR, METRICS_FILE, steps_per_epoch, train

pytestmark = pytest.mark.slow

TARGET_STEPS = 300


@pytest.fixture(scope="module")
def fixture_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixture")
    return load_manifest(write_synthetic_dataset(out, n=16, seed=1, resolution=(64, 64)))


def _config(manifest, **weights) -> TrainConfig:
    epochs = -(-TARGET_STEPS // steps_per_epoch(manifest, 4))
    ab, ba = GeneratorConfig.pair(base_channels=16)
    return TrainConfig(
        batch_size=4,
        learning_rate=2e-4,
        epochs=epochs,
        seed=0,
        generator_ab=ab,
        generator_ba=ba,
        res_a=(32, 32),
        res_b=(64, 64),
        loss_weights=LossWeights(**weights),
        checkpoint_every_n_steps=10_000,
        log_wall_time=False,
    )


def _baseline_ssim(manifest, cfg: TrainConfig, split: str) -> float:
    pairs, _ = paired_rows(manifest, split)
    scores = []
    for row_a, row_b in pairs:
        ir_a = load_sample(row_a, cfg.res_a).ir.data
        ref = load_sample(row_b, cfg.res_b).ir.data
        scores.append(float(ssim_map(resize_to(ir_a, cfg.res_b).clamp(0, 1), ref)))
    return sum(scores) / len(scores)


@pytest.fixture(scope="module")
def full_run(fixture_manifest, tmp_path_factory) -> Path:
    cfg = _config(fixture_manifest)
    return train(fixture_manifest, cfg, tmp_path_factory.mktemp("full"))


def test_overfit_reduces_cycle_loss_and_beats_bilinear(fixture_manifest, full_run: Path):
    records = [
        json.loads(line)
        for line in (full_run / METRICS_FILE).read_text(encoding="utf-8").splitlines()
    ]
    assert len(records) >= TARGET_STEPS
    assert records[TARGET_STEPS - 1]["cyc"] < 0.25 * records[0]["cyc"]

    cfg = _config(fixture_manifest)
    report = evaluate(full_run / CHECKPOINTS_DIR, fixture_manifest, split="train")
    assert report.avg_ssim >= _baseline_ssim(fixture_manifest, cfg, "train") + 0.05


def test_ssim_term_does_not_hurt(fixture_manifest, full_run: Path, tmp_path: Path):
    without = train(fixture_manifest, _config(fixture_manifest, w_ssim=0.0), tmp_path / "no_ssim")
    with_ssim = evaluate(full_run / CHECKPOINTS_DIR, fixture_manifest, split="train")
    no_ssim = evaluate(without / CHECKPOINTS_DIR, fixture_manifest, split="train")
    assert with_ssim.avg_ssim >= no_ssim.avg_ssim - 0.02


def test_full_runs_are_byte_identical(fixture_manifest, full_run: Path, tmp_path: Path):
    again = train(fixture_manifest, _config(fixture_manifest), tmp_path / "again")
    assert (again / METRICS_FILE).read_bytes() == (full_run / METRICS_FILE).read_bytes()
