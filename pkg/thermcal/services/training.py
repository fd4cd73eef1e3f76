"""
循环一致对抗训练。

CycleTrainer 持有 G_AB、G_BA、D_A、D_B 四个网络、四个 Adam 优化器、
两个回放缓冲区和一个 torch.Generator（RGB 丢弃与缓冲区抽样共用）。
train() 负责 epoch 调度、metrics.jsonl、检查点与断点续训。
"""

import json
import logging
import time
from pathlib import Path

import numpy as np
import torch
from pydantic import BaseModel, Field
from tqdm import tqdm

from ..core import get_settings
from ..core.errors import ArtifactIOError, ShapeError
from ..models import (
    Batch,
    DatasetManifest,
    LossReport,
    RunMetadata,
    TrainConfig,
    TrainConfigFile,
)
from ..networks import FeatureExtractor, Generator, PatchDiscriminator
from .checkpoint import (
    NETWORK_NAMES,
    latest_checkpoint,
    load_network_states,
    load_training_state,
    read_metadata,
    restore_module,
    save_checkpoint,
)
from .dataset import batches, select_rows
from .imaging import resize_to
from .losses import (
    check_finite,
    cycle_loss,
    discriminator_adversarial_loss,
    generator_adversarial_loss,
    generator_total,
    identity_loss,
    perceptual_components,
    ssim_loss,
    total_objectives,
)
from .replay import ReplayBuffer

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
SNAPSHOT_FILE = "config.snapshot"
CHECKPOINTS_DIR = "checkpoints"


class RunState(BaseModel):
    """训练进度计数器；优化器与随机数状态由 CycleTrainer.state_dict 一并保存。"""

    step: int = Field(default=0, ge=0, description="已完成的训练步数")
    epoch: int = Field(default=0, ge=0, description="当前 epoch（从 0 开始）")
    step_in_epoch: int = Field(default=0, ge=0, description="当前 epoch 内已完成的步数")


class CycleTrainer:
    """
    一次训练运行的全部可变状态。

    构造时以 cfg.seed 固定网络初始化；特征提取器冻结，不参与优化。
    """

    def __init__(self, cfg: TrainConfig, device: str | torch.device | None = None):
        self.cfg = cfg
        self.device = torch.device(device or get_settings().DEVICE)
        self.state = RunState()

        torch.manual_seed(cfg.seed)
        self.g_ab = Generator(cfg.generator_ab).to(self.device)
        self.g_ba = Generator(cfg.generator_ba).to(self.device)
        self.d_a = PatchDiscriminator().to(self.device)
        self.d_b = PatchDiscriminator().to(self.device)
        self.fe = FeatureExtractor("resnet18", cfg.train_backbone_stage).to(self.device)

        def adam(module: torch.nn.Module) -> torch.optim.Adam:
            return torch.optim.Adam(
                module.parameters(), lr=cfg.learning_rate, betas=cfg.betas
            )

        self.optimizers = {name: adam(self.networks[name]) for name in NETWORK_NAMES}
        self.buffer_a = ReplayBuffer(cfg.replay_buffer_capacity)
        self.buffer_b = ReplayBuffer(cfg.replay_buffer_capacity)
        self.rng = torch.Generator().manual_seed(cfg.seed)

    @property
    def networks(self) -> dict[str, torch.nn.Module]:
        return {"g_ab": self.g_ab, "g_ba": self.g_ba, "d_a": self.d_a, "d_b": self.d_b}

    def _condition(self, batch: Batch) -> torch.Tensor:
        """堆叠 RGB 条件，并以 rgb_dropout_p 的概率逐样本替换为全零占位。"""
        rgb = batch.rgb()
        p = self.cfg.rgb_dropout_p
        if p > 0:
            keep = (torch.rand(rgb.shape[0], generator=self.rng) >= p).to(rgb.dtype)
            rgb = rgb * keep.view(-1, 1, 1, 1)
        return rgb.to(self.device)

    def train_step(self, batch_a: Batch, batch_b: Batch) -> LossReport:
        """
        一个训练步：前向 → 全部损失 → 联合更新两个生成器 → 用回放图像更新两个判别器。

        Args:
            batch_a: A 域批次
            batch_b: B 域批次，与 batch_a 同样大小

        Returns:
            LossReport: 本步的分项损失

        Raises:
            ShapeError: 两个批次大小不一致
            NonFiniteLossError: 任一损失项非有限（指明损失项与步数）
        """
        if batch_a.size != batch_b.size:
            raise ShapeError(f"批次大小不一致: |A|={batch_a.size}, |B|={batch_b.size}")
        step = self.state.step + 1
        w = self.cfg.loss_weights
        for network in self.networks.values():
            network.train()

        real_a = batch_a.ir().to(self.device)
        real_b = batch_b.ir().to(self.device)
        rgb_a = self._condition(batch_a)
        rgb_b = self._condition(batch_b)

        # 前向：翻译、循环重建、恒等映射
        fake_b = self.g_ab(real_a, rgb_a)
        fake_a = self.g_ba(real_b, rgb_b)
        rec_a = self.g_ba(fake_b, resize_to(rgb_a, tuple(fake_b.shape[-2:])))
        rec_b = self.g_ab(fake_a, resize_to(rgb_b, tuple(fake_a.shape[-2:])))
        same_b = self.g_ab(real_b, rgb_b)
        same_a = self.g_ba(real_a, rgb_a)

        feature_l1, dssim = perceptual_components(
            real_a, real_b, fake_a, fake_b, self.fe
        )
        terms = {
            "gan_ab": generator_adversarial_loss(self.d_b(fake_b)),
            "gan_ba": generator_adversarial_loss(self.d_a(fake_a)),
            "cyc": cycle_loss(real_a, rec_a, real_b, rec_b),
            "id": identity_loss(
                same_b,
                resize_to(real_b, tuple(same_b.shape[-2:])),
                same_a,
                resize_to(real_a, tuple(same_a.shape[-2:])),
            ),
            "ssim": ssim_loss(real_a, rec_a) + ssim_loss(real_b, rec_b),
            "perc": feature_l1 + w.lambda_dssim * dssim,
            "dssim": dssim,
        }
        check_finite(terms, step)
        total_g = generator_total(terms, w)
        check_finite({"total_g": total_g}, step)

        self.optimizers["g_ab"].zero_grad(set_to_none=True)
        self.optimizers["g_ba"].zero_grad(set_to_none=True)
        total_g.backward()
        self.optimizers["g_ab"].step()
        self.optimizers["g_ba"].step()

        # 判别器：真实图像 vs 回放缓冲区中的生成图像
        pooled_a = self.buffer_a.draw_batch(fake_a, self.rng)
        pooled_b = self.buffer_b.draw_batch(fake_b, self.rng)
        d_losses = {}
        for name, d, real, pooled in (
            ("d_a", self.d_a, real_a, pooled_a),
            ("d_b", self.d_b, real_b, pooled_b),
        ):
            loss = discriminator_adversarial_loss(d(real), d(pooled))
            check_finite({f"total_{name}": loss}, step)
            self.optimizers[name].zero_grad(set_to_none=True)
            loss.backward()
            self.optimizers[name].step()
            d_losses[name] = loss

        self.state.step = step
        self.state.step_in_epoch += 1
        return total_objectives({**terms, **d_losses}, w, step)

    def state_dict(self) -> dict:
        """optim.pt 的内容：优化器、回放缓冲区、随机数状态和进度计数器。"""
        return {
            "optimizers": {
                name: opt.state_dict() for name, opt in self.optimizers.items()
            },
            "buffers": {
                "a": self.buffer_a.state_dict(),
                "b": self.buffer_b.state_dict(),
            },
            "rng": self.rng.get_state(),
            "run_state": self.state.model_dump(),
        }

    def load_state_dict(self, networks: dict[str, dict], training: dict) -> None:
        for name, module in self.networks.items():
            restore_module(module, networks[name], name)
        for name, opt in self.optimizers.items():
            opt.load_state_dict(training["optimizers"][name])
        self.buffer_a.load_state_dict(training["buffers"]["a"])
        self.buffer_b.load_state_dict(training["buffers"]["b"])
        self.rng.set_state(training["rng"])
        self.state = RunState.model_validate(training["run_state"])

    def metadata(self) -> RunMetadata:
        return RunMetadata(
            step=self.state.step,
            epoch=self.state.epoch,
            step_in_epoch=self.state.step_in_epoch,
            seed=self.cfg.seed,
            generator_ab=self.cfg.generator_ab,
            generator_ba=self.cfg.generator_ba,
            loss_weights=self.cfg.loss_weights,
            train_config=self.cfg,
        )

    def save(self, root: Path) -> Path:
        return save_checkpoint(root, self.metadata(), self.networks, self.state_dict())

    def restore(self, ckpt_dir: Path) -> None:
        """从检查点恢复全部训练状态。"""
        read_metadata(ckpt_dir)
        self.load_state_dict(
            load_network_states(ckpt_dir), load_training_state(ckpt_dir)
        )


def epoch_seed(seed: int, epoch: int, domain_index: int) -> int:
    """每个 epoch、每个域独立的打乱种子。"""
    return int(np.random.SeedSequence([seed, epoch, domain_index]).generate_state(1)[0])


def steps_per_epoch(manifest: DatasetManifest, batch_size: int) -> int:
    """zip-shortest 配对下每个 epoch 的步数。"""
    n_a = len(select_rows(manifest, "A", "train"))
    n_b = len(select_rows(manifest, "B", "train"))
    return min(-(-n_a // batch_size), -(-n_b // batch_size))


def _truncate_metrics(path: Path, max_step: int) -> None:
    """只保留 step ≤ max_step 的记录。"""
    if not path.is_file():
        return
    kept = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and json.loads(line)["step"] <= max_step
    ]
    path.write_text("".join(f"{line}\n" for line in kept), encoding="utf-8")


def train(
    manifest: DatasetManifest,
    cfg: TrainConfig,
    out_dir: Path | str,
    resume: bool = False,
) -> Path:
    """
    完整训练一次运行。

    Args:
        manifest: 含 A/B 两个 train 划分的清单
        cfg: 训练配置
        out_dir: 运行目录
        resume: 从 out_dir/checkpoints 中最新的检查点继续

    Returns:
        Path: 运行目录，包含 config.snapshot、metrics.jsonl 与 checkpoints/

    Raises:
        EmptyDatasetError: A 或 B 的 train 划分为空（在任何计算之前）
        NonFiniteLossError: 训练中出现非有限损失
    """
    settings = get_settings()
    n_steps = steps_per_epoch(manifest, cfg.batch_size)

    out_dir = Path(out_dir)
    ckpt_root = out_dir / CHECKPOINTS_DIR
    metrics_path = out_dir / METRICS_FILE
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / SNAPSHOT_FILE).write_text(
            TrainConfigFile.from_train_config(cfg).dumps(), encoding="utf-8"
        )
    except OSError as e:
        raise ArtifactIOError(f"无法创建运行目录 {out_dir}: {e}") from e

    if settings.DETERMINISTIC:
        torch.use_deterministic_algorithms(True, warn_only=True)

    trainer = CycleTrainer(cfg)
    if resume:
        latest = latest_checkpoint(ckpt_root)
        if latest is None:
            logger.warning(f"没有可恢复的检查点，从头开始训练: {ckpt_root}")
        else:
            trainer.restore(latest)
            _truncate_metrics(metrics_path, trainer.state.step)
            logger.info(
                f"从检查点恢复: {latest}",
                extra={"step": trainer.state.step, "epoch": trainer.state.epoch},
            )
    if not resume or trainer.state.step == 0:
        metrics_path.write_text("", encoding="utf-8")

    logger.info(
        f"开始训练: {cfg.epochs} 个 epoch，每个 epoch {n_steps} 步",
        extra={"seed": cfg.seed, "batch_size": cfg.batch_size, "out_dir": str(out_dir)},
    )
    started = time.perf_counter()

    with metrics_path.open("a", encoding="utf-8") as metrics:
        while trainer.state.epoch < cfg.epochs:
            epoch = trainer.state.epoch
            skip = trainer.state.step_in_epoch
            stream = zip(
                batches(
                    manifest,
                    "A",
                    "train",
                    cfg.batch_size,
                    shuffle_seed=epoch_seed(cfg.seed, epoch, 0),
                    resolution=cfg.res_a,
                    skip_batches=skip,
                ),
                batches(
                    manifest,
                    "B",
                    "train",
                    cfg.batch_size,
                    shuffle_seed=epoch_seed(cfg.seed, epoch, 1),
                    resolution=cfg.res_b,
                    skip_batches=skip,
                ),
            )
            progress = tqdm(
                stream,
                total=n_steps,
                initial=skip,
                desc=f"epoch {epoch + 1}/{cfg.epochs}",
                leave=False,
                disable=None,
            )
            for batch_a, batch_b in progress:
                report = trainer.train_step(batch_a, batch_b)
                wall = time.perf_counter() - started if cfg.log_wall_time else 0.0
                record = report.to_record(trainer.state.step, epoch, round(wall, 3))
                metrics.write(json.dumps(record) + "\n")
                metrics.flush()
                progress.set_postfix(
                    total_g=f"{report.total_g:.4f}", cyc=f"{report.cyc:.4f}"
                )
                if trainer.state.step % cfg.checkpoint_every_n_steps == 0:
                    trainer.save(ckpt_root)
            progress.close()

            trainer.state.epoch += 1
            trainer.state.step_in_epoch = 0
            logger.info(
                f"epoch {epoch + 1} 完成",
                extra={"epoch": epoch + 1, "step": trainer.state.step},
            )

    # 结束时总是保存一次，元数据中的 epoch 计数指向已完成的最后一个 epoch
    trainer.save(ckpt_root)
    logger.info(f"训练完成: {out_dir}", extra={"step": trainer.state.step})
    return out_dir
