"""可学习的网络：灵活卷积、非对称生成器、Patch 判别器与冻结特征提取器。"""

from .discriminator import PatchDiscriminator, discriminator_forward
from .features import FeatureExtractor, extract_features
from .flexconv import FlexConv2d, flex_conv, flex_conv_forward
from .generator import Generator, generator_forward

__all__ = [
    "FlexConv2d",
    "flex_conv",
    "flex_conv_forward",
    "Generator",
    "generator_forward",
    "PatchDiscriminator",
    "discriminator_forward",
    "FeatureExtractor",
    "extract_features",
]
