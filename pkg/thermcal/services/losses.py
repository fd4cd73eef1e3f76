"""
训练目标的各个损失项。

所有损失都是输入的纯函数，可微，且在各自的退化相等输入上为 0：
- 对抗损失：判别器取负对数似然，生成器使用非饱和形式 -log D(fake)
- 循环一致性与恒等映射：L1
- SSIM 损失：1 - SSIM
- 感知损失：冻结骨干特征上的 L1，加上 λ 倍的深特征 SSIM 损失
"""

import logging
import math

import torch
import torch.nn.functional as F

from ..core.errors import ContractViolation, NonFiniteLossError, ShapeError
from ..models import LossReport, LossWeights, SsimParams
from ..networks import FeatureExtractor
from .imaging import ssim_map

logger = logging.getLogger(__name__)

SCORE_EPS = 1e-7
FEATURE_EPS = 1e-8
REPORT_TERMS = ("gan_ab", "gan_ba", "cyc", "id", "ssim", "perc", "dssim", "d_a", "d_b")


def _check_scores(scores: torch.Tensor, name: str) -> torch.Tensor:
    if scores.numel() == 0:
        raise ContractViolation(f"{name} 分数图为空")
    if bool((scores < 0).any()) or bool((scores > 1).any()):
        low, high = scores.min().item(), scores.max().item()
        raise ContractViolation(f"{name} 分数超出 [0, 1]: [{low:.4g}, {high:.4g}]")
    return scores.clamp(SCORE_EPS, 1 - SCORE_EPS)


def discriminator_adversarial_loss(
    d_scores_real: torch.Tensor, d_scores_fake: torch.Tensor
) -> torch.Tensor:
    """-mean(log real) - mean(log(1 - fake))，对所有图块和批量取平均。"""
    real = _check_scores(d_scores_real, "real")
    fake = _check_scores(d_scores_fake, "fake")
    return -torch.log(real).mean() - torch.log1p(-fake).mean()


def generator_adversarial_loss(d_scores_fake: torch.Tensor) -> torch.Tensor:
    """非饱和生成器对抗损失 -mean(log fake)。"""
    fake = _check_scores(d_scores_fake, "fake")
    return -torch.log(fake).mean()


def adversarial_loss(
    d_scores_real: torch.Tensor, d_scores_fake: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    判别器与生成器两侧的对抗损失。

    Args:
        d_scores_real: 判别器对真实图像的 sigmoid 分数图
        d_scores_fake: 判别器对生成图像的 sigmoid 分数图

    Returns:
        tuple: (d_loss, g_loss)

    Raises:
        ContractViolation: 分数在钳制前超出 [0, 1]

    Example:
        >>> half = torch.full((1, 1, 4, 4), 0.5)
        >>> d, g = adversarial_loss(half, half)  # d ≈ 2·ln2, g ≈ ln2
    """
    return (
        discriminator_adversarial_loss(d_scores_real, d_scores_fake),
        generator_adversarial_loss(d_scores_fake),
    )


def _l1_pair(x: torch.Tensor, y: torch.Tensor, label: str) -> torch.Tensor:
    if x.shape != y.shape:
        raise ShapeError(f"{label}: 形状不一致 {tuple(x.shape)} vs {tuple(y.shape)}")
    return F.l1_loss(y, x)


def cycle_loss(
    a: torch.Tensor,
    reconstructed_a: torch.Tensor,
    b: torch.Tensor,
    reconstructed_b: torch.Tensor,
) -> torch.Tensor:
    """两个方向重建误差（平均绝对误差）之和。"""
    return _l1_pair(a, reconstructed_a, "cycle A") + _l1_pair(
        b, reconstructed_b, "cycle B"
    )


def identity_loss(
    g_ab_of_b: torch.Tensor,
    b_resampled: torch.Tensor,
    g_ba_of_a: torch.Tensor,
    a_resampled: torch.Tensor,
) -> torch.Tensor:
    """
    恒等映射损失。

    生成器会改变分辨率，调用方需先把参考图像缩放到生成器输出分辨率。
    """
    return _l1_pair(b_resampled, g_ab_of_b, "identity AB") + _l1_pair(
        a_resampled, g_ba_of_a, "identity BA"
    )


def ssim_loss(
    x: torch.Tensor, y: torch.Tensor, p: SsimParams | None = None
) -> torch.Tensor:
    """1 - SSIM，取值 [0, 2]。"""
    return 1 - ssim_map(x, y, p)


def _normalize_maps(features: torch.Tensor) -> torch.Tensor:
    """逐特征图最小-最大归一化到 [0, 1]；常数图映射为 0。"""
    flat = features.flatten(2)
    low = flat.min(dim=2, keepdim=True).values
    high = flat.max(dim=2, keepdim=True).values
    scaled = (flat - low) / (high - low).clamp_min(FEATURE_EPS)
    return scaled.view_as(features)


def feature_dssim(
    fx: torch.Tensor, fy: torch.Tensor, p: SsimParams | None = None
) -> torch.Tensor:
    """已提取特征图之间的 SSIM 损失，窗口大于特征图时自动缩小。"""
    if fx.shape != fy.shape:
        raise ShapeError(f"特征图形状不一致: {tuple(fx.shape)} vs {tuple(fy.shape)}")
    p = (p or SsimParams()).fitted_to(*fx.shape[-2:])
    return ssim_loss(_normalize_maps(fx), _normalize_maps(fy), p)


def dssim_deep(
    x: torch.Tensor,
    y: torch.Tensor,
    fe: FeatureExtractor,
    p: SsimParams | None = None,
) -> torch.Tensor:
    """
    深特征上的 SSIM 损失。

    对 φ(x)、φ(y) 逐通道做 SSIM 损失后对通道取平均，取值 [0, 2]。
    """
    squeeze = x.dim() == 3
    if squeeze:
        x, y = x.unsqueeze(0), y.unsqueeze(0)
    return feature_dssim(fe(x), fe(y), p)


def perceptual_components(
    real_a: torch.Tensor,
    real_b: torch.Tensor,
    fake_a: torch.Tensor,
    fake_b: torch.Tensor,
    fe: FeatureExtractor,
    p: SsimParams | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    感知损失的两个组成部分。

    Args:
        real_a: A 域批量 (N, 3, H_a, W_a)
        real_b: B 域批量 (N, 3, H_b, W_b)
        fake_a: G_BA(real_b)，与 real_a 同形状
        fake_b: G_AB(real_a)，与 real_b 同形状
        fe: 冻结特征提取器
        p: 深特征 SSIM 参数

    Returns:
        tuple: (两个方向特征 L1 之和, 两个方向深特征 SSIM 损失之和)

    Raises:
        ShapeError: 两个域的批大小不一致，或翻译结果与对应域形状不一致
    """
    if real_a.shape[0] != real_b.shape[0]:
        raise ShapeError(
            f"两个域的批大小不一致: N_A={real_a.shape[0]}, N_B={real_b.shape[0]}"
        )
    if fake_a.shape != real_a.shape or fake_b.shape != real_b.shape:
        raise ShapeError("翻译结果与目标域的图像形状不一致")

    phi_a, phi_fake_a = fe(real_a), fe(fake_a)
    phi_b, phi_fake_b = fe(real_b), fe(fake_b)
    feature_l1 = F.l1_loss(phi_fake_a, phi_a) + F.l1_loss(phi_fake_b, phi_b)
    dssim = feature_dssim(phi_a, phi_fake_a, p) + feature_dssim(phi_b, phi_fake_b, p)
    return feature_l1, dssim


def perceptual_loss(
    real_a: torch.Tensor,
    real_b: torch.Tensor,
    fake_a: torch.Tensor,
    fake_b: torch.Tensor,
    fe: FeatureExtractor,
    lambda_dssim: float = 1.0,
    p: SsimParams | None = None,
) -> torch.Tensor:
    """特征 L1 + λ·DSSIM。"""
    feature_l1, dssim = perceptual_components(real_a, real_b, fake_a, fake_b, fe, p)
    return feature_l1 + lambda_dssim * dssim


def _scalar(value: torch.Tensor | float) -> float:
    return float(value.detach()) if isinstance(value, torch.Tensor) else float(value)


def check_finite(
    terms: dict[str, torch.Tensor | float], step: int | None = None
) -> None:
    """
    NaN 守卫。

    Raises:
        NonFiniteLossError: 第一个非有限的损失项
    """
    for name, value in terms.items():
        scalar = _scalar(value)
        if not math.isfinite(scalar):
            logger.error(
                f"损失项 {name} 非有限，训练中止",
                extra={"term": name, "step": step, "value": scalar},
            )
            raise NonFiniteLossError(name, step)


def generator_total(terms: dict[str, torch.Tensor], w: LossWeights) -> torch.Tensor:
    """用于反向传播的生成器总损失，公式与 LossReport.total_g 相同。"""
    return (
        w.w_gan * (terms["gan_ab"] + terms["gan_ba"])
        + w.w_cyc * terms["cyc"]
        + w.w_id * terms["id"]
        + w.w_ssim * terms["ssim"]
        + w.w_perc * terms["perc"]
    )


def total_objectives(
    terms: dict[str, torch.Tensor | float],
    w: LossWeights,
    step: int | None = None,
) -> LossReport:
    """
    汇总分项损失为 LossReport。

    Args:
        terms: gan_ab, gan_ba, cyc, id, ssim, perc, dssim, d_a, d_b 九项，缺省项按 0 处理
        w: 损失权重
        step: 当前步数，仅用于错误诊断

    Raises:
        NonFiniteLossError: 任一项非有限
    """
    values = {name: _scalar(terms.get(name, 0.0)) for name in REPORT_TERMS}
    check_finite(values, step)
    total_g = (
        w.w_gan * (values["gan_ab"] + values["gan_ba"])
        + w.w_cyc * values["cyc"]
        + w.w_id * values["id"]
        + w.w_ssim * values["ssim"]
        + w.w_perc * values["perc"]
    )
    check_finite({"total_g": total_g}, step)
    return LossReport(
        gan_ab=values["gan_ab"],
        gan_ba=values["gan_ba"],
        cyc=values["cyc"],
        id=values["id"],
        ssim=values["ssim"],
        perc=values["perc"],
        dssim=values["dssim"],
        total_g=total_g,
        total_d_a=values["d_a"],
        total_d_b=values["d_b"],
    )
