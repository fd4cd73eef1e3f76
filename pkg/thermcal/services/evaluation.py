"""
测试集评估与定性对比图。

每个 A 域测试样本以零 RGB 条件送入 G_AB，输出与配对的 B 域参考图像比较：
- SSIM 在 B 域分辨率上计算
- L_φ 为评估骨干（默认 VGG-19 relu4_4）特征上的平均 L1 距离
A/B 两行按去掉 _A / _B 后缀的 ID 配对，缺少参考的样本被跳过并计数。
"""

import csv
import json
import logging
from collections.abc import Sequence
from pathlib import Path

import torch
from torchvision.utils import make_grid

from ..core import get_settings
from ..core.errors import ArtifactIOError, EmptyDatasetError
from ..models import (
    DatasetManifest,
    EvalRecord,
    EvalReport,
    ImageTensor,
    PairedSample,
    RunMetadata,
    Split,
    pair_key,
)
from ..networks import FeatureExtractor, Generator
from .checkpoint import load_generators
from .dataset import load_sample, save_image
from .imaging import resize_to, ssim_map

logger = logging.getLogger(__name__)

EVAL_JSON = "eval.json"
EVAL_SAMPLES_CSV = "eval_samples.csv"
GRID_COLUMNS = ("input_rgb", "input_ir", "output", "reference_ir")


class Translator:
    """
    检查点中的 G_AB，统一了训练检查点与自检检查点两种情况。

    自检检查点没有权重：有参考图像时返回参考图像精确缩放到输出分辨率的结果，
    否则返回输入的缩放结果，形状规律与真实生成器一致。
    """

    def __init__(
        self, checkpoint: Path | str, device: str | torch.device | None = None
    ):
        self.device = torch.device(device or get_settings().DEVICE)
        self.metadata, self.generator, _ = load_generators(checkpoint, self.device)

    def output_size(self, height: int, width: int) -> tuple[int, int]:
        r = self.metadata.generator_ab.superres_factor
        return height * r, width * r

    def __call__(
        self,
        ir: torch.Tensor,
        rgb: torch.Tensor | None = None,
        reference: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """
        翻译一张 (3, H, W) 红外图像。

        Args:
            ir: 输入红外图像
            rgb: RGB 条件，None 即零占位
            reference: 参考图像，仅自检检查点使用

        Returns:
            torch.Tensor: (3, r·H, r·W) 输出，取值 [0, 1]
        """
        size = self.output_size(*ir.shape[-2:])
        if self.generator is None:
            source = reference if reference is not None else ir
            return resize_to(source, size).clamp(0.0, 1.0)
        g: Generator = self.generator
        with torch.no_grad():
            condition = None if rgb is None else rgb[None].to(self.device)
            return g(ir[None].to(self.device), condition)[0].cpu()


def paired_rows(manifest: DatasetManifest, split: Split) -> tuple[list, int]:
    """
    按配对键把 A 域行与 B 域参考行配对。

    Returns:
        tuple: ([(A 行, B 行), ...], 缺少参考而跳过的 A 行数)

    Raises:
        EmptyDatasetError: 该划分没有 A 域样本，或所有样本都缺少参考
    """
    rows_a = manifest.select("A", split)
    if not rows_a:
        raise EmptyDatasetError(f"A 域的 {split} 划分没有样本 (empty-dataset)", split=split)
    references = {pair_key(r.sample_id): r for r in manifest.select("B", split)}
    pairs, skipped = [], 0
    for row in rows_a:
        ref = references.get(pair_key(row.sample_id))
        if ref is None:
            skipped += 1
            continue
        pairs.append((row, ref))
    if skipped:
        logger.warning(
            f"{skipped} 个 A 域样本缺少配对参考，已跳过",
            extra={"split": split, "skipped": skipped},
        )
    if not pairs:
        raise EmptyDatasetError(
            f"{split} 划分中没有任何 A/B 配对 (empty-dataset)", split=split
        )
    return pairs, skipped


def evaluate(
    checkpoint: Path | str,
    manifest: DatasetManifest,
    split: Split = "test",
    device: str | torch.device | None = None,
) -> EvalReport:
    """
    在配对测试集上计算平均 SSIM 与平均 L_φ。

    Args:
        checkpoint: 检查点目录
        manifest: 清单
        split: 数据划分，默认 test
        device: 推理设备，默认取 Settings.DEVICE

    Returns:
        EvalReport: 逐样本记录与平均值

    Raises:
        CheckpointLoadError: 检查点无法加载
        EmptyDatasetError: 没有可评估的配对
    """
    translator = Translator(checkpoint, device)
    cfg = translator.metadata.train_config
    pairs, skipped = paired_rows(manifest, split)
    fe = FeatureExtractor("vgg19", cfg.eval_backbone_stage).to(translator.device)

    records = []
    for row_a, row_b in pairs:
        sample_a = load_sample(row_a, cfg.res_a)
        reference = load_sample(row_b, cfg.res_b).ir.data
        output = translator(sample_a.ir.data, None, reference)
        with torch.no_grad():
            ssim = float(ssim_map(output, reference))
            phi = fe(torch.stack([output, reference]).to(translator.device))
            l_phi = float((phi[0] - phi[1]).abs().mean())
        records.append(EvalRecord(id=row_a.sample_id, ssim=ssim, l_phi=l_phi))
        logger.debug(
            f"样本 {row_a.sample_id}: ssim={ssim:.4f} l_phi={l_phi:.4f}",
            extra={"sample_id": row_a.sample_id},
        )

    report = EvalReport.from_records(records, skipped=skipped)
    logger.info(
        f"评估完成: {report.summary_line()}",
        extra={"n": report.n, "skipped": report.skipped, "split": split},
    )
    return report


def write_eval_report(report: EvalReport, out_dir: Path | str) -> tuple[Path, Path]:
    """
    写出 eval.json（平均值）与 eval_samples.csv（逐样本）。

    Raises:
        ArtifactIOError: 写入失败
    """
    out_dir = Path(out_dir)
    json_path = out_dir / EVAL_JSON
    csv_path = out_dir / EVAL_SAMPLES_CSV
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path.write_text(
            json.dumps(report.aggregates(), indent=2) + "\n", encoding="utf-8"
        )
        with csv_path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(("id", "ssim", "l_phi"))
            for record in report.records:
                writer.writerow((record.id, repr(record.ssim), repr(record.l_phi)))
    except OSError as e:
        raise ArtifactIOError(f"无法写入评估报告 {out_dir}: {e}", path=str(out_dir)) from e
    return json_path, csv_path


def qualitative_grid(
    checkpoint: Path | str,
    samples: Sequence[tuple[PairedSample, PairedSample]],
    out_path: Path | str,
    device: str | torch.device | None = None,
) -> Path:
    """
    写出定性对比图，每行一个样本，四列依次为：
    输入 RGB、输入红外、模型输出、参考红外。

    所有图块缩放到 B 域分辨率，列名写入 PNG 的 columns 文本块。

    Args:
        checkpoint: 检查点目录
        samples: (A 域样本, B 域参考) 列表，至少 1 个
        out_path: 输出 PNG 路径

    Raises:
        ValueError: 没有样本
        ArtifactIOError: 写入失败
    """
    if not samples:
        raise ValueError("定性对比图至少需要 1 个样本")
    translator = Translator(checkpoint, device)

    tiles = []
    for sample_a, reference in samples:
        ref = reference.ir.data
        size = tuple(ref.shape[-2:])
        output = translator(sample_a.ir.data, None, ref)
        tiles.extend(
            [
                resize_to(sample_a.rgb.data, size),
                resize_to(sample_a.ir.data, size),
                resize_to(output, size),
                ref,
            ]
        )
    grid = make_grid(
        torch.stack(tiles).clamp(0.0, 1.0),
        nrow=len(GRID_COLUMNS),
        padding=2,
        pad_value=1.0,
    )
    path = save_image(
        ImageTensor(data=grid.clamp(0.0, 1.0)),
        out_path,
        text={"columns": ",".join(GRID_COLUMNS), "rows": str(len(samples))},
    )
    logger.info(f"定性对比图已写入: {path}", extra={"rows": len(samples)})
    return path


def grid_samples(
    manifest: DatasetManifest,
    metadata: RunMetadata,
    split: Split = "test",
    limit: int = 4,
) -> list[tuple[PairedSample, PairedSample]]:
    """取前 limit 个配对，解码到训练时的分辨率。"""
    pairs, _ = paired_rows(manifest, split)
    cfg = metadata.train_config
    return [
        (load_sample(row_a, cfg.res_a), load_sample(row_b, cfg.res_b))
        for row_a, row_b in pairs[:limit]
    ]
