"""损失权重与逐步损失报告模型。"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

# 生成器侧总损失中出现的项
GENERATOR_TERMS = ("gan_ab", "gan_ba", "cyc", "id", "ssim", "perc")


class LossWeights(BaseModel):
    """
    各损失项的非负系数。

    lambda_dssim 是感知损失内部深特征 SSIM 项的系数，
    其余系数组合生成器总损失。
    """

    model_config = ConfigDict(frozen=True)

    w_gan: float = Field(default=1.0, ge=0)
    w_cyc: float = Field(default=10.0, ge=0)
    w_id: float = Field(default=5.0, ge=0)
    w_ssim: float = Field(default=1.0, ge=0)
    w_perc: float = Field(default=1.0, ge=0)
    lambda_dssim: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _at_least_one(self) -> "LossWeights":
        if not any(v > 0 for v in self.model_dump().values()):
            raise ValueError("至少需要一个正的损失权重")
        return self


class LossReport(BaseModel):
    """
    一个训练步的分项损失。

    total_g = w_gan·(gan_ab + gan_ba) + w_cyc·cyc + w_id·id
              + w_ssim·ssim + w_perc·perc
    判别器总损失只包含各自的对抗项。
    """

    model_config = ConfigDict(frozen=True)

    gan_ab: float
    gan_ba: float
    cyc: float
    id: float
    ssim: float
    perc: float
    dssim: float
    total_g: float
    total_d_a: float
    total_d_b: float

    @model_validator(mode="after")
    def _check_finite(self) -> "LossReport":
        for name, value in self.model_dump().items():
            if not math.isfinite(value):
                raise ValueError(f"损失项 {name} 非有限: {value}")
        return self

    def to_record(self, step: int, epoch: int, wall_time_s: float) -> dict:
        """metrics.jsonl 的一行，键顺序固定。"""
        return {
            "step": step,
            "epoch": epoch,
            "gan_ab": self.gan_ab,
            "gan_ba": self.gan_ba,
            "cyc": self.cyc,
            "id": self.id,
            "ssim": self.ssim,
            "perc": self.perc,
            "total_g": self.total_g,
            "total_d_a": self.total_d_a,
            "total_d_b": self.total_d_b,
            "wall_time_s": wall_time_s,
        }
