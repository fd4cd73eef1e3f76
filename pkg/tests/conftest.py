"""
测试公共夹具。

- 所有测试都关闭预训练骨干权重下载，特征提取器使用固定种子的随机初始化
- 在 tmp_path 中生成极小的合成数据集，训练相关测试在几秒内完成
"""

from pathlib import Path

import pytest

from thermcal.core import get_settings
from thermcal.models import GeneratorConfig, LossWeights, TrainConfig
from thermcal.services.dataset import load_manifest
from thermcal.services.synthetic import write_synthetic_dataset


@pytest.fixture(autouse=True)
def offline_settings(monkeypatch: pytest.MonkeyPatch):
    """离线、单进程、确定性的进程级设置。"""
    monkeypatch.setenv("THERMCAL_PRETRAINED_BACKBONES", "false")
    monkeypatch.setenv("THERMCAL_NUM_WORKERS", "0")
    monkeypatch.setenv("THERMCAL_DEVICE", "cpu")
    get_settings.cache_clear()
    yield get_settings()
    get_settings.cache_clear()


@pytest.fixture
def tiny_manifest_path(tmp_path: Path) -> Path:
    """8 个 32x32 合成配对：6 train / 1 val / 1 test。"""
    return write_synthetic_dataset(
        tmp_path / "fixture", n=8, seed=3, resolution=(32, 32), val_frac=0.1, test_frac=0.1
    )


@pytest.fixture
def tiny_manifest(tiny_manifest_path: Path):
    return load_manifest(tiny_manifest_path)


def make_tiny_config(**overrides) -> TrainConfig:
    """A 域 16x16、B 域 32x32、4 通道主干的训练配置。"""
    base_channels = overrides.pop("base_channels", 4)
    use_superres_head = overrides.pop("use_superres_head", True)
    ab, ba = GeneratorConfig.pair(
        base_channels=base_channels, use_superres_head=use_superres_head
    )
    values = dict(
        batch_size=2,
        epochs=1,
        seed=0,
        replay_buffer_capacity=2,
        checkpoint_every_n_steps=100,
        generator_ab=ab,
        generator_ba=ba,
        res_a=(16, 16),
        res_b=(32, 32),
        loss_weights=LossWeights(),
        log_wall_time=False,
    )
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture
def tiny_config() -> TrainConfig:
    return make_tiny_config()


@pytest.fixture
def config_factory():
    """按需覆盖字段的 make_tiny_config。"""
    return make_tiny_config
