"""
冻结的预训练特征提取器。

训练感知损失使用 ResNet-18（默认截断在 layer2，步长 8），
评估指标 L_φ 使用 VGG-19（默认截断在 relu4_4，步长 8）。
权重不可训练；梯度可以流向输入，但永远不会流向权重。
"""

import logging
from typing import Literal

import torch
import torch.nn as nn
from torchvision import models
from torchvision.models.vgg import cfgs, make_layers

from ..core.config import get_settings
from ..core.errors import CheckpointLoadError, ConfigError, ShapeError
from ..models.image import ImageTensor

logger = logging.getLogger(__name__)

Backbone = Literal["resnet18", "vgg19"]

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

RESNET_STAGES = {"layer1": 4, "layer2": 8, "layer3": 16, "layer4": 32}


def _vgg_layer_names(features: nn.Sequential) -> list[str]:
    """为 VGG features 中的每一层生成 conv3_4 / relu3_4 / pool3 形式的名字。"""
    names = []
    block, index = 1, 1
    for layer in features:
        if isinstance(layer, nn.Conv2d):
            names.append(f"conv{block}_{index}")
        elif isinstance(layer, nn.ReLU):
            names.append(f"relu{block}_{index}")
            index += 1
        elif isinstance(layer, nn.MaxPool2d):
            names.append(f"pool{block}")
            block, index = block + 1, 1
        else:
            names.append(f"other{len(names)}")
    return names


def _build_resnet18(stage: str, pretrained: bool) -> tuple[nn.Sequential, int]:
    if stage not in RESNET_STAGES:
        raise ConfigError(f"ResNet-18 不支持截断阶段 {stage}，可选 {list(RESNET_STAGES)}")
    weights = models.ResNet18_Weights.DEFAULT if pretrained else None
    net = models.resnet18(weights=weights)
    layers = [net.conv1, net.bn1, net.relu, net.maxpool]
    for name in RESNET_STAGES:
        layers.append(getattr(net, name))
        if name == stage:
            break
    return nn.Sequential(*layers), RESNET_STAGES[stage]


def _build_vgg19(stage: str, pretrained: bool) -> tuple[nn.Sequential, int]:
    if pretrained:
        features = models.vgg19(weights=models.VGG19_Weights.DEFAULT).features
    else:
        # 只构建卷积部分，不初始化用不到的全连接分类头
        features = make_layers(cfgs["E"], batch_norm=False)
    names = _vgg_layer_names(features)
    if stage not in names:
        raise ConfigError(f"VGG-19 不支持截断阶段 {stage}")
    cut = names.index(stage) + 1
    pools = sum(1 for name in names[:cut] if name.startswith("pool"))
    return nn.Sequential(*list(features)[:cut]), 2**pools


class FeatureExtractor(nn.Module):
    """
    截断在指定阶段的冻结分类骨干网络。

    输入为 [0, 1] 范围的 3 通道图像，内部按 ImageNet 统计量重新归一化。
    pretrained 为 None 时读取 Settings.PRETRAINED_BACKBONES；
    不使用预训练权重时以 Settings.BACKBONE_SEED 固定随机初始化。
    """

    def __init__(
        self,
        backbone: Backbone = "resnet18",
        stage: str = "layer2",
        pretrained: bool | None = None,
    ):
        super().__init__()
        settings = get_settings()
        if pretrained is None:
            pretrained = settings.PRETRAINED_BACKBONES
        self.backbone_name = backbone
        self.stage = stage
        self.pretrained = pretrained

        builders = {"resnet18": _build_resnet18, "vgg19": _build_vgg19}
        if backbone not in builders:
            raise ConfigError(f"未知的骨干网络 {backbone}")
        try:
            with torch.random.fork_rng(devices=[]):
                torch.manual_seed(settings.BACKBONE_SEED)
                self.body, self.stride = builders[backbone](stage, pretrained)
        except (OSError, RuntimeError) as e:
            raise CheckpointLoadError(
                f"无法加载 {backbone} 预训练权重: {e}；"
                "离线运行可设置 THERMCAL_PRETRAINED_BACKBONES=false"
            ) from e

        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))
        self.requires_grad_(False)
        self.eval()
        logger.debug(
            f"特征提取器已创建: {backbone}/{stage}",
            extra={"pretrained": pretrained, "stride": self.stride},
        )

    def train(self, mode: bool = True) -> "FeatureExtractor":
        # 始终保持推理模式，BatchNorm 统计量不随训练更新
        return super().train(False)

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        if img.dim() != 4 or img.shape[1] != 3:
            raise ShapeError(f"特征提取器需要 (B, 3, H, W) 输入，实际 {tuple(img.shape)}")
        mean = self.mean.to(img.dtype)
        std = self.std.to(img.dtype)
        return self.body((img - mean) / std)


def extract_features(fe: FeatureExtractor, img: ImageTensor) -> torch.Tensor:
    """提取单张图像的特征图 (C', H/stride, W/stride)。"""
    device = fe.mean.device
    with torch.no_grad():
        return fe(img.data[None].to(device))[0].cpu()
