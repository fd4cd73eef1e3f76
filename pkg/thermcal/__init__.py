"""thermcal：基于非对称 CycleGAN 的航拍红外图像校准与增强。"""

__version__ = "0.1.0"
