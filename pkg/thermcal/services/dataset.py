"""
数据集服务。

本模块负责清单 CSV 的加载与校验、红外/RGB 图像解码，以及按域和划分
生成确定性的批次流。图像解码通过 torch DataLoader 完成，
工作进程数取自 Settings.NUM_WORKERS。
"""

import csv
import logging
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from PIL.PngImagePlugin import PngInfo
from pydantic import ValidationError
from torch.utils.data import DataLoader, Dataset

from ..core import get_settings
from ..core.errors import (
    ArtifactIOError,
    DecodeError,
    DimensionError,
    EmptyDatasetError,
    ManifestError,
)
from ..models import (
    MANIFEST_COLUMNS,
    Batch,
    DatasetManifest,
    Domain,
    ImageTensor,
    ManifestRow,
    PairedSample,
    Split,
)
from .imaging import resize_to

logger = logging.getLogger(__name__)

SIXTEEN_BIT_MODES = {"I", "I;16", "I;16B", "I;16L", "I;16N"}


def load_manifest(path: Path | str) -> DatasetManifest:
    """
    加载并校验五列清单 CSV。

    相对路径按清单文件所在目录解析。空的 rgb_path 表示没有 RGB 条件。

    Args:
        path: 清单文件路径

    Returns:
        DatasetManifest: 行顺序与文件一致的清单

    Raises:
        ManifestError: 文件缺失、表头不符、行格式错误、ID 重复或路径悬空，
            错误信息中包含出错的行号
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"清单文件不存在: {path}", error="manifest-missing")
    base = path.parent

    rows: list[ManifestRow] = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"清单表头必须为 {','.join(MANIFEST_COLUMNS)}，实际为 {header}",
                row=1,
                error="malformed-row",
            )
        for line, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(MANIFEST_COLUMNS):
                raise ManifestError(
                    f"第 {line} 行应有 {len(MANIFEST_COLUMNS)} 列，实际 {len(record)} 列",
                    row=line,
                    error="malformed-row",
                )
            sample_id, domain, ir_path, rgb_path, split = (c.strip() for c in record)
            try:
                row = ManifestRow(
                    sample_id=sample_id,
                    domain=domain,
                    ir_path=base / ir_path,
                    rgb_path=(base / rgb_path) if rgb_path else None,
                    split=split,
                    line=line,
                )
            except ValidationError as e:
                first = e.errors()[0]
                field = ".".join(str(p) for p in first["loc"])
                raise ManifestError(
                    f"第 {line} 行字段 {field} 无效: {first['msg']}",
                    row=line,
                    error="malformed-row",
                ) from e

            if row.sample_id in seen:
                raise ManifestError(
                    f"第 {line} 行样本 ID 重复: {row.sample_id}"
                    f"（首次出现于第 {seen[row.sample_id]} 行）",
                    row=line,
                    error="duplicate-id",
                )
            seen[row.sample_id] = line

            for label, ref in (("ir_path", row.ir_path), ("rgb_path", row.rgb_path)):
                if ref is not None and not ref.is_file():
                    raise ManifestError(
                        f"第 {line} 行 {label} 指向不存在的文件: {ref}",
                        row=line,
                        error="dangling-path",
                    )
            rows.append(row)

    logger.info(f"清单已加载: {path} ({len(rows)} 行)")
    return DatasetManifest(rows=tuple(rows), source=path)


def decode_image(path: Path | str) -> torch.Tensor:
    """
    解码 PNG/JPEG/TIFF 图像为 (3, H, W) 浮点张量，按位深最大值归一化到 [0, 1]。

    单通道图像复制为 3 通道。

    Raises:
        DecodeError: 文件无法解码或像素格式不受支持
        DimensionError: 零面积图像
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in SIXTEEN_BIT_MODES:
                array = np.asarray(img, dtype=np.float32) / 65535.0
            elif mode == "L":
                array = np.asarray(img, dtype=np.float32) / 255.0
            elif mode in {"RGB", "RGBA", "P", "LA", "CMYK", "YCbCr", "1"}:
                array = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
            else:
                raise DecodeError(f"不支持的像素格式 {mode}: {path}", path=str(path))
    except (UnidentifiedImageError, OSError) as e:
        if isinstance(e, DecodeError):
            raise
        raise DecodeError(f"无法解码图像 {path}: {e}", path=str(path)) from e

    if array.size == 0:
        raise DimensionError(f"图像面积为零: {path}")
    if array.ndim == 2:
        array = np.repeat(array[:, :, None], 3, axis=2)
    tensor = torch.from_numpy(np.ascontiguousarray(array.transpose(2, 0, 1)))
    return tensor.clamp_(0.0, 1.0)


def load_sample(
    row: ManifestRow, target_resolution: tuple[int, int] | None
) -> PairedSample:
    """
    解码清单中的一行为配对样本。

    Args:
        row: 清单行
        target_resolution: 目标 (H, W)；None 时保持原始尺寸

    Returns:
        PairedSample: 红外与 RGB 尺寸一致；缺少 rgb_path 时 RGB 为全零占位
    """
    ir = decode_image(row.ir_path)
    size = tuple(target_resolution) if target_resolution else tuple(ir.shape[-2:])
    ir_image = ImageTensor(data=resize_to(ir, size).clamp_(0.0, 1.0))
    if row.rgb_path is None:
        return PairedSample.without_rgb(
            id=row.sample_id, domain=row.domain, ir=ir_image
        )
    rgb = resize_to(decode_image(row.rgb_path), size).clamp_(0.0, 1.0)
    return PairedSample(
        id=row.sample_id,
        domain=row.domain,
        ir=ir_image,
        rgb=ImageTensor(data=rgb),
    )


class ManifestDataset(Dataset):
    """清单行的 torch Dataset 视图，按索引解码样本。"""

    def __init__(self, rows: list[ManifestRow], resolution: tuple[int, int] | None):
        self.rows = rows
        self.resolution = resolution

    def __len__(self) -> int:
        return len(self.rows)

    def __getitem__(self, index: int) -> PairedSample:
        return load_sample(self.rows[index], self.resolution)


def _collate(samples: list[PairedSample]) -> Batch:
    return Batch(samples=samples)


def select_rows(
    manifest: DatasetManifest, domain: Domain, split: Split
) -> list[ManifestRow]:
    """
    按域和划分筛选清单行。

    Raises:
        EmptyDatasetError: 筛选结果为空
    """
    rows = manifest.select(domain, split)
    if not rows:
        raise EmptyDatasetError(
            f"域 {domain} 的 {split} 划分没有样本 (empty-dataset)",
            domain=domain,
            split=split,
        )
    return rows


def epoch_order(n: int, shuffle_seed: int | None) -> list[int]:
    """固定种子下确定的样本顺序；种子为 None 时保持清单顺序。"""
    if shuffle_seed is None:
        return list(range(n))
    return np.random.default_rng(shuffle_seed).permutation(n).tolist()


def batches(
    manifest: DatasetManifest,
    domain: Domain,
    split: Split,
    batch_size: int,
    shuffle_seed: int | None = None,
    resolution: tuple[int, int] | None = None,
    skip_batches: int = 0,
) -> Iterator[Batch]:
    """
    生成一个 epoch 的批次流。

    固定种子下顺序确定；最后一个不满的批次也会输出。

    Args:
        manifest: 清单
        domain: A 或 B
        split: 数据划分
        batch_size: 批大小
        shuffle_seed: 打乱种子，None 表示不打乱
        resolution: 解码目标 (H, W)
        skip_batches: 跳过开头的若干批次（恢复训练时使用）

    Yields:
        Batch: 同域、同分辨率的样本批次

    Raises:
        EmptyDatasetError: 所选域/划分为空
    """
    if batch_size < 1:
        raise ValueError(f"batch_size 必须 ≥1，实际 {batch_size}")
    rows = select_rows(manifest, domain, split)
    order = epoch_order(len(rows), shuffle_seed)[skip_batches * batch_size :]
    if not order:
        return
    loader = DataLoader(
        ManifestDataset(rows, resolution),
        batch_size=batch_size,
        sampler=order,
        num_workers=get_settings().NUM_WORKERS,
        collate_fn=_collate,
    )
    yield from loader


def to_uint8(image: torch.Tensor) -> np.ndarray:
    """(3, H, W) [0, 1] 张量 → (H, W, 3) uint8 数组，四舍五入量化。"""
    array = (image.detach().cpu().clamp(0.0, 1.0) * 255.0).round().to(torch.uint8)
    return np.ascontiguousarray(array.permute(1, 2, 0).numpy())


def save_image(
    image: torch.Tensor | ImageTensor,
    path: Path | str,
    text: dict[str, str] | None = None,
) -> Path:
    """
    以 8 位 RGB PNG 保存图像。

    编码参数固定，相同输入总是得到字节相同的文件。

    Args:
        image: (3, H, W) 图像
        path: 输出路径，父目录会被创建
        text: 写入 PNG tEXt 块的键值对

    Raises:
        ArtifactIOError: 写入失败
    """
    data = image.data if isinstance(image, ImageTensor) else image
    path = Path(path)
    info = None
    if text:
        info = PngInfo()
        for key, value in text.items():
            info.add_text(key, value)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(to_uint8(data)).save(
            path, format="PNG", compress_level=6, optimize=False, pnginfo=info
        )
    except OSError as e:
        raise ArtifactIOError(f"无法写入图像 {path}: {e}", path=str(path)) from e
    return path
