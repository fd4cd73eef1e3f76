"""
子命令聚合。

本模块收集所有子命令，并提供函数将它们注册到主解析器中。
"""

import argparse

from .eval import register as register_eval
from .synth import register as register_synth
from .train import register as register_train
from .translate import register as register_translate


def register_commands(subparsers: argparse._SubParsersAction) -> None:
    """
    将所有子命令注册到主解析器。

    子命令按使用顺序组织：
    - synth: 生成合成配对数据集
    - train: 训练
    - eval: 测试集评估与定性对比图
    - translate: 单张图像翻译

    Args:
        subparsers: 主解析器的 add_subparsers() 返回值
    """
    register_synth(subparsers)
    register_train(subparsers)
    register_eval(subparsers)
    register_translate(subparsers)
