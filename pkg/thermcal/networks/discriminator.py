"""
Patch-GAN 判别器。

四个步长为 2 的卷积（核 5、5、3、3，padding = k // 2）把 H×W 输入降到
ceil(H/16)×ceil(W/16)，再由 3×3 卷积给出每个图块的分数。
每个分数的感受野约为 69×69 像素。
"""

import torch
import torch.nn as nn

from ..core.errors import ShapeError
from ..models.image import ImageTensor

MIN_INPUT_SIDE = 16
STAGE_KERNELS = (5, 5, 3, 3)


class PatchDiscriminator(nn.Module):
    """
    D_A 或 D_B：输出 (B, 1, h', w') 的 sigmoid 分数图，每个元素对应一个图块。

    首尾两层不做归一化（16×16 输入时末层只有 1×1），中间层使用实例归一化；
    每层后接 LeakyReLU(0.2)。
    """

    def __init__(self, in_channels: int = 3, base_channels: int = 64):
        super().__init__()
        layers: list[nn.Module] = []
        channels_in = in_channels
        for index, kernel in enumerate(STAGE_KERNELS):
            channels_out = base_channels * min(2**index, 8)
            layers.append(
                nn.Conv2d(
                    channels_in, channels_out, kernel, stride=2, padding=kernel // 2
                )
            )
            if 0 < index < len(STAGE_KERNELS) - 1:
                layers.append(nn.InstanceNorm2d(channels_out, affine=True))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            channels_in = channels_out
        layers.append(nn.Conv2d(channels_in, 1, 3, stride=1, padding=1))
        self.model = nn.Sequential(*layers)

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        if img.dim() != 4 or img.shape[1] != 3:
            raise ShapeError(f"判别器需要 (B, 3, H, W) 输入，实际 {tuple(img.shape)}")
        height, width = img.shape[-2:]
        if height < MIN_INPUT_SIDE or width < MIN_INPUT_SIDE:
            raise ShapeError(
                f"判别器输入至少 {MIN_INPUT_SIDE}x{MIN_INPUT_SIDE}，实际 {height}x{width}"
            )
        return torch.sigmoid(self.model(img))


def discriminator_forward(d: PatchDiscriminator, img: ImageTensor) -> torch.Tensor:
    """对单张图像打分，返回 (h', w') 分数图（无梯度）。"""
    with torch.no_grad():
        device = next(d.parameters()).device
        return d(img.data[None].to(device))[0, 0].cpu()
