"""生成器配置模型。"""

from fractions import Fraction
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

Direction = Literal["AB", "BA"]


class GeneratorConfig(BaseModel):
    """
    多层级生成器的结构参数。

    AB 方向负责质量提升，可带像素重排超分辨率头；
    BA 方向以步长 r 的面积池化头回到 A 域分辨率。

    Attributes:
        levels: 输入金字塔层级数，固定为 3
        base_channels: 每层主干的通道数
        use_superres_head: AB 方向是否使用可学习的超分辨率头
        superres_factor: 域间分辨率倍数 r
        fusion_enabled: 是否拼接 RGB 条件（早期拼接融合）
        direction: AB 或 BA
    """

    model_config = ConfigDict(frozen=True)

    levels: Literal[3] = Field(default=3, description="金字塔层级数")
    base_channels: int = Field(default=32, ge=1, description="主干通道数")
    use_superres_head: bool = Field(default=True, description="可学习超分辨率头")
    superres_factor: Literal[1, 2] = Field(default=2, description="分辨率倍数 r")
    fusion_enabled: bool = Field(default=True, description="RGB 融合条件")
    direction: Direction = Field(default="AB", description="翻译方向")

    @model_validator(mode="after")
    def _check_direction(self) -> "GeneratorConfig":
        if self.direction == "BA" and self.use_superres_head:
            raise ValueError("BA 方向不允许使用超分辨率头")
        return self

    @property
    def scale(self) -> Fraction:
        """输出尺寸 / 输入尺寸。"""
        r = Fraction(self.superres_factor)
        return r if self.direction == "AB" else 1 / r

    @property
    def in_channels(self) -> int:
        return 6 if self.fusion_enabled else 3

    @classmethod
    def pair(
        cls,
        base_channels: int = 32,
        superres_factor: Literal[1, 2] = 2,
        use_superres_head: bool = True,
        fusion_enabled: bool = True,
    ) -> tuple["GeneratorConfig", "GeneratorConfig"]:
        """构造一对非对称的 (G_AB, G_BA) 配置。"""
        ab = cls(
            base_channels=base_channels,
            superres_factor=superres_factor,
            use_superres_head=use_superres_head,
            fusion_enabled=fusion_enabled,
            direction="AB",
        )
        ba = cls(
            base_channels=base_channels,
            superres_factor=superres_factor,
            use_superres_head=False,
            fusion_enabled=fusion_enabled,
            direction="BA",
        )
        return ab, ba
