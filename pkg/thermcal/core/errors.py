"""
统一的异常类型。

每个异常都带有稳定的错误代码 (error) 和命令行退出码 (exit_code)，
由 app.run 统一转换为结构化的错误输出。
"""

from typing import Any


class ThermcalError(Exception):
    """所有 thermcal 异常的基类。"""

    error: str = "internal-error"
    exit_code: int = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context


class ConfigError(ThermcalError, ValueError):
    """配置文件或命令行参数无效。"""

    error = "config-error"
    exit_code = 2


class EmptyDatasetError(ThermcalError, ValueError):
    """所选域/划分下没有任何样本。"""

    error = "empty-dataset"
    exit_code = 2


class ManifestError(ThermcalError, ValueError):
    """清单文件加载失败，row 为出错的行号（表头为第 1 行）。"""

    error = "manifest-error"
    exit_code = 2

    def __init__(self, message: str, row: int | None = None, error: str | None = None):
        super().__init__(message, row=row)
        self.row = row
        if error is not None:
            self.error = error


class ShapeError(ThermcalError, ValueError):
    """张量形状不满足操作的前置条件。"""

    error = "shape-error"
    exit_code = 2


class DimensionError(ThermcalError, ValueError):
    """空间尺寸无效（非整数目标尺寸、零面积图像等）。"""

    error = "dimension-error"
    exit_code = 2


class ContractViolation(ThermcalError, ValueError):
    """输入违反了函数约定（例如判别器分数不在 [0, 1] 内）。"""

    error = "contract-violation"
    exit_code = 2


class DecodeError(ThermcalError, OSError):
    """图像文件无法解码。"""

    error = "decode-error"
    exit_code = 1


class ArtifactIOError(ThermcalError, OSError):
    """写入产物（图像、清单、报告）失败。"""

    error = "io-error"
    exit_code = 1


class NonFiniteLossError(ThermcalError, ArithmeticError):
    """损失项出现 NaN/Inf，训练中止。"""

    error = "nan-abort"
    exit_code = 3

    def __init__(self, term: str, step: int | None = None):
        super().__init__(
            f"损失项 {term} 非有限 (step={step})", term=term, step=step
        )
        self.term = term
        self.step = step


class CheckpointLoadError(ThermcalError, OSError):
    """检查点目录缺失或损坏。"""

    error = "checkpoint-load"
    exit_code = 4
