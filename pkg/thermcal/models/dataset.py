"""数据集清单、配对样本和批次模型。"""

from pathlib import Path
from typing import Literal

import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .image import ImageTensor

Domain = Literal["A", "B"]
Split = Literal["train", "val", "test"]

MANIFEST_COLUMNS = ("sample_id", "domain", "ir_path", "rgb_path", "split")


def pair_key(sample_id: str) -> str:
    """
    去掉样本 ID 末尾的 _A / _B 域后缀，得到配对键。

    Example:
        >>> pair_key("synth_00007_A")
        'synth_00007'
    """
    if len(sample_id) > 2 and sample_id[-2] == "_" and sample_id[-1] in "ABab":
        return sample_id[:-2]
    return sample_id


class ManifestRow(BaseModel):
    """
    清单中的一行。

    Attributes:
        sample_id: 唯一样本 ID
        domain: A（低质量红外）或 B（高质量红外）
        ir_path: 红外图像路径
        rgb_path: 可选的配对 RGB 图像路径
        split: train / val / test
        line: 在 CSV 文件中的行号（表头为第 1 行）
    """

    model_config = ConfigDict(frozen=True)

    sample_id: str = Field(min_length=1, description="唯一样本 ID")
    domain: Domain = Field(description="所属域")
    ir_path: Path = Field(description="红外图像路径")
    rgb_path: Path | None = Field(default=None, description="配对 RGB 图像路径")
    split: Split = Field(description="数据划分")
    line: int = Field(default=0, description="CSV 行号")


class DatasetManifest(BaseModel):
    """已验证的清单，行顺序与文件一致，加载后不可变。"""

    model_config = ConfigDict(frozen=True)

    rows: tuple[ManifestRow, ...] = Field(default_factory=tuple)
    source: Path | None = Field(default=None, description="清单文件路径")

    def select(self, domain: Domain, split: Split) -> list[ManifestRow]:
        """按域和划分筛选行，保持原始顺序。"""
        return [r for r in self.rows if r.domain == domain and r.split == split]

    def __len__(self) -> int:
        return len(self.rows)


class PairedSample(BaseModel):
    """
    一个红外样本及其 RGB 条件图像。

    缺少 RGB 时 rgb 为同尺寸的全零图像（ZERO 占位符），has_rgb 为 False。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    id: str = Field(description="样本 ID")
    domain: Domain = Field(description="所属域")
    ir: ImageTensor = Field(description="3 通道红外图像，[0, 1]")
    rgb: ImageTensor = Field(description="3 通道 RGB 条件图像或全零占位")
    has_rgb: bool = Field(default=True, description="是否有真实的 RGB 条件")

    @model_validator(mode="after")
    def _check_pair(self) -> "PairedSample":
        if self.ir.channels != 3 or self.rgb.channels != 3:
            raise ValueError(
                f"样本 {self.id}: ir/rgb 必须为 3 通道，"
                f"实际 {self.ir.channels}/{self.rgb.channels}"
            )
        if self.ir.size != self.rgb.size:
            raise ValueError(
                f"样本 {self.id}: ir {self.ir.size} 与 rgb {self.rgb.size} 尺寸不一致"
            )
        return self

    @classmethod
    def without_rgb(cls, id: str, domain: Domain, ir: ImageTensor) -> "PairedSample":
        """用 ZERO 占位符构造样本。"""
        zeros = ImageTensor.zeros(3, ir.height, ir.width)
        return cls(id=id, domain=domain, ir=ir, rgb=zeros, has_rgb=False)


class Batch(BaseModel):
    """同一域、同一分辨率的一组样本。"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: list[PairedSample] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_uniform(self) -> "Batch":
        first = self.samples[0]
        for sample in self.samples[1:]:
            if sample.domain != first.domain:
                raise ValueError("批次内样本必须属于同一域")
            if sample.ir.size != first.ir.size:
                raise ValueError(
                    f"批次内分辨率不一致: {sample.ir.size} != {first.ir.size}"
                )
        return self

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def domain(self) -> Domain:
        return self.samples[0].domain

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    def ir(self) -> torch.Tensor:
        """堆叠为 (B, 3, H, W)。"""
        return torch.stack([s.ir.data for s in self.samples])

    def rgb(self) -> torch.Tensor:
        """堆叠为 (B, 3, H, W)，占位样本为全零。"""
        return torch.stack([s.rgb.data for s in self.samples])
