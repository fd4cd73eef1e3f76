"""
图像几何/辐射基本操作与窗口化 SSIM 统计量。

所有函数都是输入的纯函数，接受 (C, H, W) 或批量 (B, C, H, W) 张量，
也接受 ImageTensor（此时返回 ImageTensor）。SSIM 对两个输入都可微。
"""

from fractions import Fraction
from typing import Literal, TypeVar

import torch
import torch.nn.functional as F

from ..core.errors import DimensionError, ShapeError
from ..models.image import ImageTensor, SsimParams

ImageLike = TypeVar("ImageLike", torch.Tensor, ImageTensor)


def _unwrap(img: torch.Tensor | ImageTensor) -> tuple[torch.Tensor, bool]:
    if isinstance(img, ImageTensor):
        return img.data, True
    return img, False


def _wrap(data: torch.Tensor, like: ImageTensor) -> ImageTensor:
    return ImageTensor(data=data, value_range=like.value_range)


def _as_batch(x: torch.Tensor) -> tuple[torch.Tensor, bool]:
    if x.dim() == 3:
        return x.unsqueeze(0), True
    if x.dim() == 4:
        return x, False
    raise ShapeError(f"需要 (C, H, W) 或 (B, C, H, W) 张量，实际形状 {tuple(x.shape)}")


def target_size(size: tuple[int, int], scale: float | Fraction) -> tuple[int, int]:
    """
    计算缩放后的 (H, W)。

    Raises:
        DimensionError: scale·H 或 scale·W 不是正整数
    """
    factor = Fraction(scale).limit_denominator(1 << 16)
    if factor <= 0:
        raise DimensionError(f"缩放比例必须为正，实际 {scale}")
    out = []
    for side in size:
        scaled = factor * side
        if scaled.denominator != 1 or scaled <= 0:
            raise DimensionError(f"尺寸 {size} 按比例 {scale} 缩放后不是正整数")
        out.append(int(scaled))
    return out[0], out[1]


def resize_to(x: torch.Tensor, size: tuple[int, int]) -> torch.Tensor:
    """
    缩放到指定 (H, W)：缩小用面积平均，放大用双线性。

    面积平均避免了直接跨步采样带来的混叠。
    """
    batch, squeeze = _as_batch(x)
    height, width = batch.shape[-2:]
    if (height, width) == tuple(size):
        out = batch
    elif size[0] <= height and size[1] <= width:
        out = F.interpolate(batch, size=size, mode="area")
    else:
        out = F.interpolate(batch, size=size, mode="bilinear", align_corners=False)
    return out.squeeze(0) if squeeze else out


def resize(img: ImageLike, scale: float | Fraction) -> ImageLike:
    """
    按比例缩放图像。

    Args:
        img: 输入图像
        scale: 正有理数比例，scale·H 与 scale·W 必须为整数

    Returns:
        缩放后的图像，scale == 1 时原样返回
    """
    data, wrapped = _unwrap(img)
    size = target_size(tuple(data.shape[-2:]), scale)
    out = resize_to(data, size)
    return _wrap(out, img) if wrapped else out


def pixel_shuffle(img: ImageLike, r: int) -> ImageLike:
    """
    亚像素重排：(C, H, W) → (C/r², rH, rW)。

    输出 (c, r·h+i, r·w+j) 等于输入 (c·r² + i·r + j, h, w)。
    """
    data, wrapped = _unwrap(img)
    if r < 1:
        raise ShapeError(f"重排因子必须为正整数，实际 {r}")
    channels = data.shape[-3]
    if channels % (r * r):
        raise ShapeError(f"通道数 {channels} 不能被 r²={r * r} 整除")
    out = F.pixel_shuffle(data, r)
    return _wrap(out, img) if wrapped else out


def pixel_unshuffle(img: ImageLike, r: int) -> ImageLike:
    """pixel_shuffle 的精确逆：(C, H, W) → (C·r², H/r, W/r)。"""
    data, wrapped = _unwrap(img)
    if r < 1:
        raise ShapeError(f"重排因子必须为正整数，实际 {r}")
    height, width = data.shape[-2:]
    if height % r or width % r:
        raise ShapeError(f"尺寸 {height}x{width} 不能被 r={r} 整除")
    out = F.pixel_unshuffle(data, r)
    return _wrap(out, img) if wrapped else out


def gaussian_window(
    size: int,
    sigma: float = 1.5,
    dtype: torch.dtype = torch.float32,
    device: torch.device | str | None = None,
) -> torch.Tensor:
    """归一化（总和为 1）的二维高斯窗口，形状 (size, size)。"""
    coords = torch.arange(size, dtype=torch.float64) - (size - 1) / 2
    gauss = torch.exp(-(coords**2) / (2 * sigma**2))
    gauss = gauss / gauss.sum()
    window = torch.outer(gauss, gauss)
    return window.to(dtype=dtype, device=device)


def ssim_map(
    x: torch.Tensor | ImageTensor,
    y: torch.Tensor | ImageTensor,
    p: SsimParams | None = None,
    reduction: Literal["mean", "none"] = "mean",
) -> torch.Tensor:
    """
    平均 SSIM 指数。

    在所有步长为 1 的完整窗口（不填充）上计算相似度比值，
    按通道、窗口（以及批量，reduction="mean" 时）取平均。
    两个输入的声明取值范围应等于 p.dynamic_range。

    Args:
        x: 第一幅图像
        y: 第二幅图像，与 x 同形状
        p: SSIM 参数
        reduction: "mean" 返回标量，"none" 返回每个批量元素一个值

    Returns:
        torch.Tensor: [-1, 1] 内的 SSIM

    Raises:
        ShapeError: 形状不一致或窗口大于图像
    """
    p = p or SsimParams()
    x, _ = _unwrap(x)
    y, _ = _unwrap(y)
    if x.shape != y.shape:
        raise ShapeError(f"SSIM 输入形状不一致: {tuple(x.shape)} vs {tuple(y.shape)}")
    xb, _ = _as_batch(x)
    yb, _ = _as_batch(y)
    channels, height, width = xb.shape[-3:]
    if p.window_size > min(height, width):
        raise ShapeError(f"SSIM 窗口 {p.window_size} 大于图像 {height}x{width}")

    window = gaussian_window(p.window_size, p.sigma, dtype=xb.dtype, device=xb.device)
    weight = window.expand(channels, 1, p.window_size, p.window_size)

    def local_mean(t: torch.Tensor) -> torch.Tensor:
        return F.conv2d(t, weight, groups=channels)

    mu_x = local_mean(xb)
    mu_y = local_mean(yb)
    mu_xx = mu_x * mu_x
    mu_yy = mu_y * mu_y
    mu_xy = mu_x * mu_y
    sigma_xx = local_mean(xb * xb) - mu_xx
    sigma_yy = local_mean(yb * yb) - mu_yy
    sigma_xy = local_mean(xb * yb) - mu_xy

    c1, c2 = p.c1, p.c2
    numerator = (2 * mu_xy + c1) * (2 * sigma_xy + c2)
    denominator = (mu_xx + mu_yy + c1) * (sigma_xx + sigma_yy + c2)
    index = numerator / denominator

    if reduction == "none":
        return index.flatten(1).mean(dim=1)
    return index.mean()

