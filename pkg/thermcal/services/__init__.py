"""数据、损失、训练与评估服务层。"""

from .checkpoint import (
    latest_checkpoint,
    load_generators,
    read_metadata,
    resolve_checkpoint,
    save_checkpoint,
    write_self_test_checkpoint,
)
from .dataset import batches, decode_image, load_manifest, load_sample, save_image
from .evaluation import Translator, evaluate, qualitative_grid, write_eval_report
from .imaging import pixel_shuffle, pixel_unshuffle, resize, ssim_map
from .losses import (
    adversarial_loss,
    cycle_loss,
    dssim_deep,
    identity_loss,
    perceptual_loss,
    ssim_loss,
    total_objectives,
)
from .replay import ReplayBuffer, buffer_draw
from .synthetic import make_synthetic_pair, write_synthetic_dataset
from .training import CycleTrainer, RunState, train

__all__ = [
    # 图像基本操作
    "resize",
    "pixel_shuffle",
    "pixel_unshuffle",
    "ssim_map",

    # 数据集
    "load_manifest",
    "load_sample",
    "batches",
    "decode_image",
    "save_image",
    "make_synthetic_pair",
    "write_synthetic_dataset",

    # 损失
    "adversarial_loss",
    "cycle_loss",
    "identity_loss",
    "ssim_loss",
    "dssim_deep",
    "perceptual_loss",
    "total_objectives",

    # 训练
    "ReplayBuffer",
    "buffer_draw",
    "CycleTrainer",
    "RunState",
    "train",
    "save_checkpoint",
    "read_metadata",
    "load_generators",
    "latest_checkpoint",
    "resolve_checkpoint",
    "write_self_test_checkpoint",

    # 评估
    "Translator",
    "evaluate",
    "write_eval_report",
    "qualitative_grid",
]
