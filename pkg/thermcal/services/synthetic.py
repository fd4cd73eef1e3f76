"""
合成配对数据集。

B 域图像：冷背景上的若干高斯热斑，经固定的单调调色板渲染为伪彩色红外图。
A 域图像：同一温度场按 90 百分位截断后（热点饱和）渲染，
再经 σ=1.5 高斯模糊、σ=0.05 加性噪声（截断到 [0, 1]）和 2 倍面积下采样。
RGB 条件：纹理背景上的热斑轮廓。

固定种子下结果逐位相同，A/B 两幅图像在空间上对齐。
"""

import csv
import logging
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torchvision.transforms.functional import gaussian_blur

from ..core.errors import ArtifactIOError, ConfigError
from ..models import MANIFEST_COLUMNS, ImageTensor, PairedSample
from .dataset import save_image
from .imaging import resize_to

logger = logging.getLogger(__name__)

# 单调调色板：温度 0→1 依次经过黑、紫、红、橙、浅黄，亮度单调递增
PALETTE_KNOTS = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
PALETTE_COLORS = np.array(
    [
        [0.00, 0.00, 0.05],
        [0.35, 0.05, 0.45],
        [0.80, 0.15, 0.20],
        [0.98, 0.55, 0.05],
        [1.00, 0.98, 0.75],
    ]
)

BACKGROUND_TEMPERATURE = 0.12
BLUR_SIGMA = 1.5
BLUR_KERNEL = 11
NOISE_SIGMA = 0.05
CLIP_PERCENTILE = 90.0
SILHOUETTE_LEVEL = 0.5


def apply_palette(temperature: np.ndarray) -> np.ndarray:
    """(H, W) 温度场 → (3, H, W) 伪彩色图像，逐通道分段线性插值。"""
    t = np.clip(temperature, 0.0, 1.0)
    channels = [np.interp(t, PALETTE_KNOTS, PALETTE_COLORS[:, c]) for c in range(3)]
    return np.stack(channels)


def _blobs(
    rng: np.random.Generator, height: int, width: int, n_blobs: int
) -> list[np.ndarray]:
    """每个热斑一个 (H, W) 高斯响应，峰值为 1。"""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    ys += 0.5
    xs += 0.5
    side = min(height, width)
    responses = []
    for _ in range(n_blobs):
        cy = rng.uniform(0.2, 0.8) * height
        cx = rng.uniform(0.2, 0.8) * width
        sigma = rng.uniform(0.06, 0.12) * side
        responses.append(np.exp(-((ys - cy) ** 2 + (xs - cx) ** 2) / (2 * sigma**2)))
    return responses


def _texture(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """低频随机纹理，取值 [0, 1]。"""
    coarse = rng.random((1, 1, height // 8 + 2, width // 8 + 2))
    smooth = F.interpolate(
        torch.from_numpy(coarse),
        size=(height, width),
        mode="bilinear",
        align_corners=False,
    )
    return smooth[0, 0].numpy()


def make_synthetic_pair(
    seed: int,
    resolution: tuple[int, int] = (64, 64),
    n_blobs: int = 3,
    prefix: str | None = None,
) -> tuple[PairedSample, PairedSample]:
    """
    生成一对空间对齐的 A/B 样本。

    Args:
        seed: 随机种子
        resolution: B 域 (H, W)，两边都需 ≥16 且为偶数；A 域为其一半
        n_blobs: 热斑数量，≥1
        prefix: 样本 ID 前缀，默认 synth_<seed>

    Returns:
        tuple: (A 域样本, B 域样本)，ID 分别以 _A / _B 结尾

    Raises:
        ConfigError: 参数不满足前置条件
    """
    height, width = resolution
    if height < 16 or width < 16:
        raise ConfigError(f"合成分辨率至少 16x16，实际 {height}x{width}")
    if height % 2 or width % 2:
        raise ConfigError(f"合成分辨率必须为偶数，实际 {height}x{width}")
    if n_blobs < 1:
        raise ConfigError(f"n_blobs 必须 ≥1，实际 {n_blobs}")
    prefix = prefix or f"synth_{seed:05d}"

    rng = np.random.default_rng(seed)
    responses = _blobs(rng, height, width, n_blobs)
    amplitudes = rng.uniform(0.55, 0.85, size=n_blobs)
    field = BACKGROUND_TEMPERATURE + sum(a * r for a, r in zip(amplitudes, responses))
    field = np.clip(field, 0.0, 1.0)

    clean = torch.from_numpy(apply_palette(field)).float()

    # 没有温度基准的相机按 90 百分位自动定标，热点饱和
    ceiling = max(float(np.percentile(field, CLIP_PERCENTILE)), 1e-6)
    degraded = torch.from_numpy(apply_palette(np.minimum(field / ceiling, 1.0))).float()
    degraded = gaussian_blur(
        degraded, kernel_size=[BLUR_KERNEL, BLUR_KERNEL], sigma=[BLUR_SIGMA, BLUR_SIGMA]
    )
    noise = torch.from_numpy(rng.normal(0.0, NOISE_SIGMA, size=degraded.shape)).float()
    degraded = (degraded + noise).clamp(0.0, 1.0)
    size_a = (height // 2, width // 2)
    degraded = resize_to(degraded, size_a).clamp(0.0, 1.0)

    texture = _texture(rng, height, width)
    ground = np.stack(
        [0.22 + 0.18 * texture, 0.30 + 0.20 * texture, 0.16 + 0.12 * texture]
    )
    silhouette = (np.max(np.stack(responses), axis=0) > SILHOUETTE_LEVEL)[None]
    smoke = np.array([0.62, 0.60, 0.58])[:, None, None]
    rgb_b = torch.from_numpy(np.where(silhouette, smoke, ground)).float()
    rgb_b = rgb_b.clamp(0.0, 1.0)
    rgb_a = resize_to(rgb_b, size_a).clamp(0.0, 1.0)

    sample_a = PairedSample(
        id=f"{prefix}_A",
        domain="A",
        ir=ImageTensor(data=degraded.contiguous()),
        rgb=ImageTensor(data=rgb_a.contiguous()),
    )
    sample_b = PairedSample(
        id=f"{prefix}_B",
        domain="B",
        ir=ImageTensor(data=clean.contiguous()),
        rgb=ImageTensor(data=rgb_b.contiguous()),
    )
    return sample_a, sample_b


def assign_splits(n: int, seed: int, val_frac: float, test_frac: float) -> list[str]:
    """
    为 n 个配对分配数据划分。

    n_test = max(1, round(n·test_frac))；n ≥ 3 时 n_val = max(1, round(n·val_frac))；
    其余为 train。
    """
    if not (0 <= val_frac < 1 and 0 <= test_frac < 1):
        raise ConfigError(f"划分比例必须位于 [0, 1)，实际 val={val_frac} test={test_frac}")
    n_test = min(n, max(1, round(n * test_frac)))
    n_val = max(1, round(n * val_frac)) if n >= 3 else 0
    n_val = min(n_val, n - n_test)
    order = np.random.default_rng(seed).permutation(n)
    splits = ["train"] * n
    for rank, index in enumerate(order):
        if rank < n_test:
            splits[index] = "test"
        elif rank < n_test + n_val:
            splits[index] = "val"
    return splits


def write_synthetic_dataset(
    out: Path | str,
    n: int,
    seed: int,
    resolution: tuple[int, int] = (64, 64),
    n_blobs: int = 3,
    val_frac: float = 0.05,
    test_frac: float = 0.05,
) -> Path:
    """
    写入 n 个合成配对及清单。

    目录布局：
        out/A/ir/<id>.png  out/A/rgb/<id>.png
        out/B/ir/<id>.png  out/B/rgb/<id>.png
        out/manifest.csv   （先列出全部 A 行，再列出全部 B 行）

    Returns:
        Path: 清单路径

    Raises:
        ConfigError: 参数无效
        ArtifactIOError: 写入失败
    """
    if n < 1:
        raise ConfigError(f"合成样本数必须 ≥1，实际 {n}")
    out = Path(out)
    splits = assign_splits(n, seed, val_frac, test_frac)
    seeds = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)

    rows: dict[str, list[tuple[str, ...]]] = {"A": [], "B": []}
    for index in range(n):
        pair = make_synthetic_pair(
            int(seeds[index]), resolution, n_blobs, prefix=f"synth_{index:05d}"
        )
        for sample in pair:
            ir_rel = Path(sample.domain, "ir", f"{sample.id}.png")
            rgb_rel = Path(sample.domain, "rgb", f"{sample.id}.png")
            save_image(sample.ir, out / ir_rel)
            save_image(sample.rgb, out / rgb_rel)
            rows[sample.domain].append(
                (
                    sample.id,
                    sample.domain,
                    ir_rel.as_posix(),
                    rgb_rel.as_posix(),
                    splits[index],
                )
            )

    manifest_path = out / "manifest.csv"
    try:
        with manifest_path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(MANIFEST_COLUMNS)
            writer.writerows(rows["A"] + rows["B"])
    except OSError as e:
        raise ArtifactIOError(f"无法写入清单 {manifest_path}: {e}") from e

    logger.info(
        f"合成数据集已写入: {out}",
        extra={"n": n, "seed": seed, "resolution": resolution},
    )
    return manifest_path
