"""核心配置、设置和异常模块。"""

from .config import Settings, get_settings
from .errors import (
    ArtifactIOError,
    CheckpointLoadError,
    ConfigError,
    ContractViolation,
    DecodeError,
    DimensionError,
    EmptyDatasetError,
    ManifestError,
    NonFiniteLossError,
    ShapeError,
    ThermcalError,
)

__all__ = [
    "Settings",
    "get_settings",
    "ThermcalError",
    "ConfigError",
    "EmptyDatasetError",
    "ManifestError",
    "ShapeError",
    "DimensionError",
    "ContractViolation",
    "DecodeError",
    "ArtifactIOError",
    "NonFiniteLossError",
    "CheckpointLoadError",
]
