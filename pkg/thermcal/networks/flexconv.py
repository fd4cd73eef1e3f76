"""
灵活卷积：带调制掩码的可变形卷积。

每个输出像素的 k² 个采样点按学习到的分数偏移做双线性采样，
再乘以 sigmoid 调制掩码，最后与权重张量做卷积。
偏移为零、掩码为一时与同权重的标准卷积完全一致。
"""

import torch
import torch.nn as nn
from torchvision.ops import deform_conv2d

from ..core.errors import ShapeError


def flex_conv(
    x: torch.Tensor,
    offset: torch.Tensor,
    mask: torch.Tensor,
    weight: torch.Tensor,
    bias: torch.Tensor | None = None,
) -> torch.Tensor:
    """
    函数式灵活卷积，保持空间尺寸（padding = k // 2）。

    Args:
        x: (B, C_in, H, W) 输入
        offset: (B, 2·k², H, W) 偏移，每个采样点依次为 (dy, dx)
        mask: (B, k², H, W) 调制掩码
        weight: (C_out, C_in, k, k) 卷积权重
        bias: (C_out,) 偏置

    Returns:
        torch.Tensor: (B, C_out, H, W)
    """
    if x.dim() != 4:
        raise ShapeError(f"灵活卷积需要 4 维输入，实际形状 {tuple(x.shape)}")
    c_out, c_in, kh, kw = weight.shape
    if x.shape[1] != c_in:
        raise ShapeError(f"输入通道 {x.shape[1]} 与权重通道 {c_in} 不一致")
    if offset.shape[1] != 2 * kh * kw or mask.shape[1] != kh * kw:
        raise ShapeError(
            f"偏移/掩码通道应为 {2 * kh * kw}/{kh * kw}，"
            f"实际 {offset.shape[1]}/{mask.shape[1]}"
        )
    return deform_conv2d(
        x,
        offset,
        weight,
        bias,
        padding=(kh // 2, kw // 2),
        mask=mask,
    )


class FlexConv2d(nn.Module):
    """
    灵活卷积层。

    offset_predictor 为每个像素预测 2·k² 个偏移，
    modulation_predictor 预测 k² 个经 sigmoid 激活的掩码。
    两个预测器都零初始化，训练开始时偏移为零、掩码为 0.5。
    """

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ValueError(f"灵活卷积核必须为奇数，实际 {kernel_size}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        taps = kernel_size * kernel_size
        padding = kernel_size // 2

        self.weight = nn.Parameter(
            torch.empty(out_channels, in_channels, kernel_size, kernel_size)
        )
        self.bias = nn.Parameter(torch.zeros(out_channels))
        self.offset_predictor = nn.Conv2d(
            in_channels, 2 * taps, kernel_size, padding=padding
        )
        self.modulation_predictor = nn.Conv2d(
            in_channels, taps, kernel_size, padding=padding
        )
        self.reset_parameters()

    def reset_parameters(self) -> None:
        nn.init.kaiming_uniform_(self.weight, a=5**0.5)
        nn.init.zeros_(self.bias)
        for predictor in (self.offset_predictor, self.modulation_predictor):
            nn.init.zeros_(predictor.weight)
            nn.init.zeros_(predictor.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise ShapeError(
                f"FlexConv2d 期望 {self.in_channels} 通道输入，实际 {x.shape[1]}"
            )
        offset = self.offset_predictor(x)
        mask = torch.sigmoid(self.modulation_predictor(x))
        return flex_conv(x, offset, mask, self.weight, self.bias)


def flex_conv_forward(layer: FlexConv2d, x: torch.Tensor) -> torch.Tensor:
    """对单张 (C, H, W) 或批量特征图应用灵活卷积层。"""
    if x.dim() == 3:
        return layer(x.unsqueeze(0)).squeeze(0)
    return layer(x)
