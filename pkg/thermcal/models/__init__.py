"""
用于校验和序列化的 Pydantic 模型。

注意：
- 图像/样本模型在摄入时检查不变量
- 配置模型在构造时检查取值范围
- 报告模型负责 metrics.jsonl / eval.json 的序列化格式
"""

from .dataset import (
    MANIFEST_COLUMNS,
    Batch,
    DatasetManifest,
    Domain,
    ManifestRow,
    PairedSample,
    Split,
    pair_key,
)
from .evaluation import EVAL_FORMAT, EvalRecord, EvalReport
from .image import ImageTensor, SsimParams
from .losses import GENERATOR_TERMS, LossReport, LossWeights
from .networks import Direction, GeneratorConfig
from .training import (
    CHECKPOINT_FORMAT_VERSION,
    RunMetadata,
    TrainConfig,
    TrainConfigFile,
    format_resolution,
    parse_resolution,
)

__all__ = [
    # 图像
    "ImageTensor",
    "SsimParams",

    # 数据集
    "MANIFEST_COLUMNS",
    "Batch",
    "DatasetManifest",
    "Domain",
    "ManifestRow",
    "PairedSample",
    "Split",
    "pair_key",

    # 网络与损失
    "Direction",
    "GeneratorConfig",
    "GENERATOR_TERMS",
    "LossReport",
    "LossWeights",

    # 训练
    "CHECKPOINT_FORMAT_VERSION",
    "RunMetadata",
    "TrainConfig",
    "TrainConfigFile",
    "format_resolution",
    "parse_resolution",

    # 评估
    "EVAL_FORMAT",
    "EvalRecord",
    "EvalReport",
]
