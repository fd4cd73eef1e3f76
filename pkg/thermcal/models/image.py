"""图像容器与 SSIM 参数模型。"""

import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ALLOWED_CHANNELS = (1, 3, 6)
MIN_SIDE = 4


class ImageTensor(BaseModel):
    """
    通道优先的浮点栅格图像。

    不变量只在构造（摄入）时检查一次，逐操作不再重复检查：
    取值位于声明区间内、全部有限、通道数属于 {1, 3, 6}、边长不小于 4。

    Attributes:
        data: 形状为 (C, H, W) 的张量
        value_range: 声明的闭区间，默认 [0, 1]
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: torch.Tensor = Field(description="(C, H, W) 浮点张量")
    value_range: tuple[float, float] = Field(
        default=(0.0, 1.0), description="声明的取值闭区间"
    )

    @field_validator("data")
    @classmethod
    def _check_data(cls, data: torch.Tensor) -> torch.Tensor:
        if data.dim() != 3:
            raise ValueError(f"图像必须是 (C, H, W) 三维张量，实际维度 {data.dim()}")
        channels, height, width = data.shape
        if channels not in ALLOWED_CHANNELS:
            raise ValueError(f"通道数必须属于 {ALLOWED_CHANNELS}，实际为 {channels}")
        if height < MIN_SIDE or width < MIN_SIDE:
            raise ValueError(f"图像尺寸至少 {MIN_SIDE}x{MIN_SIDE}，实际 {height}x{width}")
        if not data.is_floating_point():
            raise ValueError(f"图像必须是浮点类型，实际 {data.dtype}")
        if not torch.isfinite(data).all():
            raise ValueError("图像包含 NaN 或 Inf")
        return data

    @model_validator(mode="after")
    def _check_range(self) -> "ImageTensor":
        low, high = self.value_range
        if low >= high:
            raise ValueError(f"无效的取值区间 {self.value_range}")
        if self.data.min() < low or self.data.max() > high:
            raise ValueError(
                f"图像取值 [{self.data.min():.4g}, {self.data.max():.4g}] "
                f"超出声明区间 {self.value_range}"
            )
        return self

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def size(self) -> tuple[int, int]:
        """(H, W)。"""
        return self.height, self.width

    @classmethod
    def zeros(cls, channels: int, height: int, width: int) -> "ImageTensor":
        """全零图像，ZERO 占位符展开后的形式。"""
        return cls(data=torch.zeros(channels, height, width))


class SsimParams(BaseModel):
    """
    SSIM 统计量参数。

    c1 = (k1·L)², c2 = (k2·L)²，窗口为 σ=1.5 的高斯权重。
    """

    model_config = ConfigDict(frozen=True)

    window_size: int = Field(default=11, gt=0, description="奇数窗口边长")
    k1: float = Field(default=0.01, gt=0)
    k2: float = Field(default=0.03, gt=0)
    dynamic_range: float = Field(default=1.0, gt=0, description="动态范围 L")
    sigma: float = Field(default=1.5, gt=0, description="高斯窗口标准差")

    @field_validator("window_size")
    @classmethod
    def _odd_window(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"SSIM 窗口边长必须为奇数，实际 {value}")
        return value

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    def fitted_to(self, height: int, width: int) -> "SsimParams":
        """
        窗口大于特征图时，退化为不超过最小边长的最大奇数窗口。

        Args:
            height: 特征图高度
            width: 特征图宽度

        Returns:
            SsimParams: 可直接用于该尺寸的参数
        """
        limit = min(height, width)
        if self.window_size <= limit:
            return self
        size = limit if limit % 2 == 1 else limit - 1
        return self.model_copy(update={"window_size": max(size, 1)})
