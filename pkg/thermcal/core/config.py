"""
thermcal 的核心配置模块。

本模块使用 Pydantic 的 BaseSettings 管理进程级设置，
从环境变量（前缀 THERMCAL_）和 .env 文件加载配置，并提供合理的默认值。
"""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    从环境变量加载的进程级设置。

    所有设置都可以通过设置相应的环境变量来覆盖
    (例如：THERMCAL_DEVICE, THERMCAL_NUM_WORKERS, THERMCAL_LOG_LEVEL)。
    单次训练运行的超参数不在这里，见 models.training.TrainConfigFile。
    """

    model_config = SettingsConfigDict(
        env_prefix="THERMCAL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # 应用元数据
    APP_NAME: str = "thermcal"
    APP_VERSION: str = "0.1.0"
    APP_DESCRIPTION: str = "基于非对称 CycleGAN 的航拍红外图像校准与增强"

    # 运行时
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    DEVICE: str = "cpu"
    NUM_WORKERS: int = 0  # 0 表示在主进程中解码图像
    DETERMINISTIC: bool = True

    # 冻结骨干网络
    PRETRAINED_BACKBONES: bool = True  # False 时使用固定种子的随机初始化（离线/测试）
    BACKBONE_SEED: int = 0


@lru_cache
def get_settings() -> Settings:
    """
    获取缓存的设置实例。

    此函数被缓存以确保设置只加载一次，
    并在整个进程生命周期中重用同一实例。
    测试中修改环境变量后需调用 get_settings.cache_clear()。

    Returns:
        Settings: 设置实例
    """
    return Settings()
