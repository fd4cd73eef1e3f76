"""
非对称多层级生成器。

前向流程：
1. 早期拼接融合：红外与 RGB 条件在通道维拼接为 6 通道输入；
2. 构建 1、0.5、0.25 三层输入金字塔（面积平均下采样）；
3. 每层：两层标准卷积 → 灵活卷积；
4. 每层用像素重排（因子 1、2、4）回到全分辨率；
5. 三层输出在通道维拼接后融合；
6. G_AB 经超分辨率头放大 r 倍，G_BA 经面积池化头缩小 r 倍；
7. 输出头 + sigmoid，取值在 [0, 1]。
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..core.errors import ShapeError
from ..models.image import ImageTensor
from ..models.networks import GeneratorConfig
from .flexconv import FlexConv2d

TIER_SCALES = (1, 2, 4)  # 每层相对输入的下采样倍数，同时是其像素重排因子


def _conv_block(in_channels: int, out_channels: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, 3, padding=1),
        nn.InstanceNorm2d(out_channels, affine=True),
        nn.ReLU(inplace=True),
    )


class Tier(nn.Module):
    """单个金字塔层级：卷积主干 + 灵活卷积 + 亚像素上采样。"""

    def __init__(self, in_channels: int, channels: int, factor: int):
        super().__init__()
        self.factor = factor
        self.trunk = nn.Sequential(
            _conv_block(in_channels, channels),
            _conv_block(channels, channels),
        )
        self.flex = FlexConv2d(channels, channels, kernel_size=3)
        self.expand = nn.Conv2d(channels, channels * factor * factor, 3, padding=1)
        self.shuffle = nn.PixelShuffle(factor)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.trunk(x)
        x = F.relu(self.flex(x))
        return self.shuffle(self.expand(x))


class Generator(nn.Module):
    """
    G_AB 或 G_BA。

    输出空间尺寸 = 输入尺寸 × r（AB）或 ÷ r（BA），输出 3 通道、取值 [0, 1]。
    AB 方向 use_superres_head=False 为消融配置：
    以固定的双线性放大代替可学习的超分辨率头，输出仍为 r 倍而不是 1 倍，
    循环重建与高分辨率 SSIM 的形状保持不变。
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        channels = config.base_channels
        self.tiers = nn.ModuleList(
            Tier(config.in_channels, channels, factor) for factor in TIER_SCALES
        )
        self.fuse = _conv_block(channels * len(TIER_SCALES), channels)

        r = config.superres_factor
        self.superres: nn.Module | None = None
        if config.direction == "AB" and config.use_superres_head and r > 1:
            self.superres = nn.Sequential(
                nn.Conv2d(channels, channels * r * r, 3, padding=1),
                nn.PixelShuffle(r),
                nn.ReLU(inplace=True),
            )
        self.head = nn.Conv2d(channels, 3, 3, padding=1)

    def output_size(self, height: int, width: int) -> tuple[int, int]:
        r = self.config.superres_factor
        if self.config.direction == "AB":
            return height * r, width * r
        return height // r, width // r

    def forward(
        self, ir: torch.Tensor, rgb: torch.Tensor | None = None
    ) -> torch.Tensor:
        """
        Args:
            ir: (B, 3, H, W) 红外输入
            rgb: (B, 3, H, W) RGB 条件；None 等价于全零占位

        Returns:
            torch.Tensor: (B, 3, H', W')，取值 [0, 1]
        """
        if ir.dim() != 4 or ir.shape[1] != 3:
            raise ShapeError(f"生成器需要 (B, 3, H, W) 红外输入，实际 {tuple(ir.shape)}")
        height, width = ir.shape[-2:]
        if height < 16 or width < 16 or height % 4 or width % 4:
            raise ShapeError(f"生成器输入尺寸需 ≥16 且能被 4 整除，实际 {height}x{width}")
        if rgb is None:
            rgb = torch.zeros_like(ir)
        elif rgb.shape != ir.shape:
            raise ShapeError(
                f"RGB 条件 {tuple(rgb.shape)} 与红外输入 {tuple(ir.shape)} 尺寸不一致"
            )

        x = torch.cat([ir, rgb], dim=1) if self.config.fusion_enabled else ir

        outputs = []
        for tier in self.tiers:
            level = x if tier.factor == 1 else F.avg_pool2d(x, tier.factor)
            outputs.append(tier(level))
        features = self.fuse(torch.cat(outputs, dim=1))

        r = self.config.superres_factor
        if self.config.direction == "AB" and r > 1:
            if self.superres is not None:
                features = self.superres(features)
            else:
                # 消融：去掉学习式上采样头，改用固定双线性放大，输出尺寸仍为 r 倍
                features = F.interpolate(
                    features, scale_factor=r, mode="bilinear", align_corners=False
                )
        elif self.config.direction == "BA" and r > 1:
            features = F.avg_pool2d(features, r)

        return torch.sigmoid(self.head(features))


def generator_forward(
    g: Generator, ir: ImageTensor, rgb_condition: ImageTensor | None = None
) -> ImageTensor:
    """
    对单张图像做翻译（推理模式，无梯度）。

    Args:
        g: 生成器
        ir: 3 通道红外图像
        rgb_condition: 同尺寸 RGB 条件；None 或全零图像即测试阶段的占位输入

    Returns:
        ImageTensor: 翻译结果
    """
    if rgb_condition is not None and rgb_condition.size != ir.size:
        raise ShapeError(f"RGB 条件 {rgb_condition.size} 与红外输入 {ir.size} 尺寸不一致")
    device = next(g.parameters()).device
    was_training = g.training
    g.eval()
    with torch.no_grad():
        rgb = None if rgb_condition is None else rgb_condition.data[None].to(device)
        out = g(ir.data[None].to(device), rgb)
    g.train(was_training)
    return ImageTensor(data=out[0].cpu())
