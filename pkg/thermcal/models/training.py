"""
训练配置、配置文件和检查点元数据模型。

配置文件是扁平的 key=value 文本（# 开头为注释），
由 TrainConfigFile 读取，再转换为类型化的 TrainConfig。
"""

from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from ..core.errors import ConfigError
from .losses import LossWeights
from .networks import GeneratorConfig

CHECKPOINT_FORMAT_VERSION = 1


def parse_resolution(text: str) -> tuple[int, int]:
    """
    解析 "HxW" 形式的分辨率。

    Example:
        >>> parse_resolution("128x160")
        (128, 160)
    """
    parts = text.lower().strip().split("x")
    if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
        raise ConfigError(f"分辨率必须写作 HxW，实际为 {text!r}")
    height, width = (int(p) for p in parts)
    if height <= 0 or width <= 0:
        raise ConfigError(f"分辨率必须为正，实际为 {text!r}")
    return height, width


def format_resolution(size: tuple[int, int]) -> str:
    return f"{size[0]}x{size[1]}"


class TrainConfig(BaseModel):
    """
    一次训练运行的全部超参数。

    默认值来自原始实验设置：批大小 32、学习率 0.0002、50 个 epoch。
    """

    model_config = ConfigDict(frozen=True)

    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=2e-4, gt=0)
    epochs: int = Field(default=50, ge=1)
    betas: tuple[float, float] = Field(default=(0.5, 0.999))
    seed: int = Field(default=0)
    replay_buffer_capacity: int = Field(default=50, ge=0)
    checkpoint_every_n_steps: int = Field(default=1000, ge=1)
    loss_weights: LossWeights = Field(default_factory=LossWeights)
    generator_ab: GeneratorConfig = Field(
        default_factory=lambda: GeneratorConfig.pair()[0]
    )
    generator_ba: GeneratorConfig = Field(
        default_factory=lambda: GeneratorConfig.pair()[1]
    )
    res_a: tuple[int, int] = Field(default=(128, 160), description="A 域 (H, W)")
    res_b: tuple[int, int] = Field(default=(256, 320), description="B 域 (H, W)")
    train_backbone_stage: str = Field(default="layer2")
    eval_backbone_stage: str = Field(default="relu4_4")
    rgb_dropout_p: float = Field(default=0.2, ge=0, le=1)
    log_wall_time: bool = Field(default=False)

    @model_validator(mode="after")
    def _check_geometry(self) -> "TrainConfig":
        if self.generator_ab.direction != "AB" or self.generator_ba.direction != "BA":
            raise ValueError("generator_ab/generator_ba 方向配置错误")
        r = self.generator_ab.superres_factor
        if self.generator_ba.superres_factor != r:
            raise ValueError("两个生成器的 superres_factor 必须一致")
        for name, (h, w) in (("res_a", self.res_a), ("res_b", self.res_b)):
            if h < 16 or w < 16 or h % 4 or w % 4:
                raise ValueError(f"{name} 必须 ≥16 且能被 4 整除，实际 {h}x{w}")
        if self.res_b != (self.res_a[0] * r, self.res_a[1] * r):
            raise ValueError(
                f"res_b 必须等于 res_a × {r}，实际 "
                f"{format_resolution(self.res_a)} → {format_resolution(self.res_b)}"
            )
        return self


class TrainConfigFile(BaseSettings):
    """
    扁平 key=value 配置文件。

    只从初始化参数和指定的文件读取，忽略进程环境变量，
    这样运行目录中的 config.snapshot 可以完整复现一次运行。
    未知键会被拒绝，缺失的键取默认值。
    """

    model_config = SettingsConfigDict(
        env_file_encoding="utf-8", case_sensitive=False, extra="forbid"
    )

    batch_size: int = 32
    learning_rate: float = 2e-4
    epochs: int = 50
    seed: int = 0
    res_a: str = "128x160"
    res_b: str = "256x320"
    superres_factor: int = Field(default=2, ge=1, le=2)
    use_superres_head: bool = True
    base_channels: int = 32
    w_gan: float = 1.0
    w_cyc: float = 10.0
    w_id: float = 5.0
    w_ssim: float = 1.0
    w_perc: float = 1.0
    lambda_dssim: float = 1.0
    replay_capacity: int = 50
    checkpoint_every: int = 1000
    train_backbone_stage: str = "layer2"
    eval_backbone_stage: str = "relu4_4"
    rgb_dropout_p: float = 0.2
    log_wall_time: bool = False

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return init_settings, dotenv_settings

    @classmethod
    def load(cls, path: Path | None = None) -> "TrainConfigFile":
        """
        读取配置文件；path 为 None 时全部取默认值。

        Raises:
            ConfigError: 文件不存在、包含未知键或取值无效
        """
        if path is None:
            return cls()
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"配置文件不存在: {path}")
        known = set(cls.model_fields)
        for key in dotenv_values(path, encoding="utf-8"):
            if key.lower() not in known:
                raise ConfigError(f"未知的配置键: {key}", key=key)
        try:
            return cls(_env_file=path)
        except ValidationError as e:
            first = e.errors()[0]
            key = ".".join(str(p) for p in first["loc"])
            raise ConfigError(f"配置键 {key} 无效: {first['msg']}", key=key) from e

    def to_train_config(self) -> TrainConfig:
        """转换为类型化的训练配置，并检查各模块的类型不变量。"""
        try:
            ab, ba = GeneratorConfig.pair(
                base_channels=self.base_channels,
                superres_factor=self.superres_factor,
                use_superres_head=self.use_superres_head,
            )
            return TrainConfig(
                batch_size=self.batch_size,
                learning_rate=self.learning_rate,
                epochs=self.epochs,
                seed=self.seed,
                replay_buffer_capacity=self.replay_capacity,
                checkpoint_every_n_steps=self.checkpoint_every,
                loss_weights=LossWeights(
                    w_gan=self.w_gan,
                    w_cyc=self.w_cyc,
                    w_id=self.w_id,
                    w_ssim=self.w_ssim,
                    w_perc=self.w_perc,
                    lambda_dssim=self.lambda_dssim,
                ),
                generator_ab=ab,
                generator_ba=ba,
                res_a=parse_resolution(self.res_a),
                res_b=parse_resolution(self.res_b),
                train_backbone_stage=self.train_backbone_stage,
                eval_backbone_stage=self.eval_backbone_stage,
                rgb_dropout_p=self.rgb_dropout_p,
                log_wall_time=self.log_wall_time,
            )
        except ValidationError as e:
            first = e.errors()[0]
            raise ConfigError(f"配置无效: {first['msg']}") from e

    @classmethod
    def from_train_config(cls, cfg: TrainConfig) -> "TrainConfigFile":
        w = cfg.loss_weights
        return cls(
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            epochs=cfg.epochs,
            seed=cfg.seed,
            res_a=format_resolution(cfg.res_a),
            res_b=format_resolution(cfg.res_b),
            superres_factor=cfg.generator_ab.superres_factor,
            use_superres_head=cfg.generator_ab.use_superres_head,
            base_channels=cfg.generator_ab.base_channels,
            w_gan=w.w_gan,
            w_cyc=w.w_cyc,
            w_id=w.w_id,
            w_ssim=w.w_ssim,
            w_perc=w.w_perc,
            lambda_dssim=w.lambda_dssim,
            replay_capacity=cfg.replay_buffer_capacity,
            checkpoint_every=cfg.checkpoint_every_n_steps,
            train_backbone_stage=cfg.train_backbone_stage,
            eval_backbone_stage=cfg.eval_backbone_stage,
            rgb_dropout_p=cfg.rgb_dropout_p,
            log_wall_time=cfg.log_wall_time,
        )

    def dumps(self) -> str:
        """序列化为 key=value 文本（config.snapshot 格式）。"""
        lines = ["# thermcal 训练配置快照"]
        for key, value in self.model_dump().items():
            if isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


class RunMetadata(BaseModel):
    """
    检查点目录中的 metadata.json。

    kind 为 self_test 时没有网络权重，评估使用参考图像的精确缩放作为输出，
    用于验证评估流程本身。
    """

    format_version: int = Field(default=CHECKPOINT_FORMAT_VERSION)
    kind: Literal["trained", "self_test"] = Field(default="trained")
    step: int = Field(default=0, ge=0)
    epoch: int = Field(default=0, ge=0)
    step_in_epoch: int = Field(default=0, ge=0)
    seed: int = Field(default=0)
    generator_ab: GeneratorConfig
    generator_ba: GeneratorConfig
    loss_weights: LossWeights
    train_config: TrainConfig
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
