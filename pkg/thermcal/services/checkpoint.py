"""
检查点读写。

目录布局：
    checkpoints/step_<N>/
        g_ab.pt  g_ba.pt  d_a.pt  d_b.pt   网络权重 (state_dict)
        optim.pt                            优化器、回放缓冲区与随机数状态
        metadata.json                       RunMetadata

写入先落到临时目录再整体重命名，读取方不会看到写了一半的检查点。
"""

import json
import logging
import os
import shutil
from pathlib import Path
from typing import Literal

import torch
import torch.nn as nn
from pydantic import ValidationError

from ..core.errors import ArtifactIOError, CheckpointLoadError
from ..models import GeneratorConfig, LossWeights, RunMetadata, TrainConfig
from ..networks import Generator

logger = logging.getLogger(__name__)

NETWORK_NAMES = ("g_ab", "g_ba", "d_a", "d_b")
METADATA_FILE = "metadata.json"
TRAINING_STATE_FILE = "optim.pt"
STEP_PREFIX = "step_"


def checkpoint_dir(root: Path, step: int) -> Path:
    return Path(root) / f"{STEP_PREFIX}{step}"


def save_checkpoint(
    root: Path,
    metadata: RunMetadata,
    networks: dict[str, nn.Module],
    training_state: dict | None = None,
) -> Path:
    """
    原子地写入一个检查点。

    Args:
        root: checkpoints 目录
        metadata: 检查点元数据，目录名取 metadata.step
        networks: g_ab / g_ba / d_a / d_b 到模块的映射
        training_state: 优化器等训练状态，可为 None

    Returns:
        Path: 检查点目录

    Raises:
        ArtifactIOError: 写入失败
    """
    target = checkpoint_dir(root, metadata.step)
    staging = target.with_name(target.name + ".tmp")
    try:
        if staging.exists():
            shutil.rmtree(staging)
        staging.mkdir(parents=True)
        for name, module in networks.items():
            torch.save(module.state_dict(), staging / f"{name}.pt")
        if training_state is not None:
            torch.save(training_state, staging / TRAINING_STATE_FILE)
        (staging / METADATA_FILE).write_text(
            metadata.model_dump_json(indent=2), encoding="utf-8"
        )
        if target.exists():
            shutil.rmtree(target)
        os.replace(staging, target)
    except OSError as e:
        raise ArtifactIOError(f"写入检查点失败: {target}: {e}", path=str(target)) from e

    logger.info(
        f"检查点已保存: {target}",
        extra={"step": metadata.step, "epoch": metadata.epoch, "kind": metadata.kind},
    )
    return target


def read_metadata(ckpt_dir: Path | str) -> RunMetadata:
    """
    读取并校验 metadata.json。

    Raises:
        CheckpointLoadError: 目录或元数据缺失、JSON 损坏或字段无效
    """
    ckpt_dir = Path(ckpt_dir)
    path = ckpt_dir / METADATA_FILE
    if not ckpt_dir.is_dir():
        raise CheckpointLoadError(f"检查点目录不存在: {ckpt_dir}", path=str(ckpt_dir))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return RunMetadata.model_validate(raw)
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise CheckpointLoadError(
            f"检查点元数据无效: {path}: {e}", path=str(path)
        ) from e


def _load_state(path: Path) -> dict:
    try:
        return torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointLoadError(f"无法读取检查点文件 {path}: {e}", path=str(path)) from e


def load_network_states(ckpt_dir: Path | str) -> dict[str, dict]:
    """读取四个网络的 state_dict。"""
    ckpt_dir = Path(ckpt_dir)
    return {name: _load_state(ckpt_dir / f"{name}.pt") for name in NETWORK_NAMES}


def load_training_state(ckpt_dir: Path | str) -> dict:
    """读取 optim.pt。"""
    return _load_state(Path(ckpt_dir) / TRAINING_STATE_FILE)


def restore_module(module: nn.Module, state: dict, name: str) -> None:
    """把 state_dict 装入模块，结构不匹配时抛出 CheckpointLoadError。"""
    try:
        module.load_state_dict(state)
    except (RuntimeError, KeyError) as e:
        raise CheckpointLoadError(f"网络 {name} 的权重与结构不匹配: {e}") from e


def load_generators(
    ckpt_dir: Path | str, device: str | torch.device = "cpu"
) -> tuple[RunMetadata, Generator | None, Generator | None]:
    """
    加载推理用的两个生成器。

    Returns:
        tuple: (metadata, G_AB, G_BA)；自检检查点没有权重，两个生成器均为 None

    Raises:
        CheckpointLoadError: 元数据或权重无法加载
    """
    metadata = read_metadata(ckpt_dir)
    if metadata.kind == "self_test":
        return metadata, None, None

    generators = []
    configs = (("g_ab", metadata.generator_ab), ("g_ba", metadata.generator_ba))
    for name, config in configs:
        g = Generator(config)
        restore_module(g, _load_state(Path(ckpt_dir) / f"{name}.pt"), name)
        generators.append(g.to(device).eval())
    return metadata, generators[0], generators[1]


def list_checkpoints(root: Path | str) -> list[tuple[int, Path]]:
    """按步数升序列出完整的检查点目录（忽略临时目录）。"""
    root = Path(root)
    if not root.is_dir():
        return []
    found = []
    for child in root.iterdir():
        suffix = child.name.removeprefix(STEP_PREFIX)
        if child.is_dir() and child.name.startswith(STEP_PREFIX) and suffix.isdigit():
            if (child / METADATA_FILE).is_file():
                found.append((int(suffix), child))
    return sorted(found)


def latest_checkpoint(root: Path | str) -> Path | None:
    """最新的检查点目录，没有时返回 None。"""
    found = list_checkpoints(root)
    return found[-1][1] if found else None


def write_self_test_checkpoint(
    ckpt_dir: Path | str,
    superres_factor: Literal[1, 2] = 2,
    res_a: tuple[int, int] = (128, 160),
) -> Path:
    """
    写入评估流程自检用的检查点。

    该检查点不含权重；评估时 G_AB 被替换为"把参考图像精确缩放到 B 域分辨率"，
    因此任何配对测试集上的结果都应为 avg_ssim = 1、avg_l_phi = 0。
    """
    ab, ba = GeneratorConfig.pair(superres_factor=superres_factor)
    res_b = (res_a[0] * superres_factor, res_a[1] * superres_factor)
    cfg = TrainConfig(generator_ab=ab, generator_ba=ba, res_a=res_a, res_b=res_b)
    metadata = RunMetadata(
        kind="self_test",
        generator_ab=ab,
        generator_ba=ba,
        loss_weights=LossWeights(),
        train_config=cfg,
    )
    ckpt_dir = Path(ckpt_dir)
    try:
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        (ckpt_dir / METADATA_FILE).write_text(
            metadata.model_dump_json(indent=2), encoding="utf-8"
        )
    except OSError as e:
        raise ArtifactIOError(f"写入自检检查点失败: {ckpt_dir}: {e}") from e
    logger.info(f"自检检查点已写入: {ckpt_dir}")
    return ckpt_dir


def resolve_checkpoint(path: Path | str) -> Path:
    """
    把命令行给出的路径解析为具体的检查点目录。

    接受检查点目录本身、checkpoints 目录或运行目录；后两者取最新的检查点。

    Raises:
        CheckpointLoadError: 找不到任何检查点
    """
    path = Path(path)
    if (path / METADATA_FILE).is_file():
        return path
    for root in (path, path / "checkpoints"):
        latest = latest_checkpoint(root)
        if latest is not None:
            return latest
    if path.is_dir():
        # 目录存在但没有元数据，交由 read_metadata 报告具体原因
        return path
    raise CheckpointLoadError(f"找不到检查点: {path}", path=str(path))
