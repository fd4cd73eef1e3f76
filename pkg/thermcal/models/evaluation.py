"""评估报告模型。"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

EVAL_FORMAT = "thermcal-eval/1"


class EvalRecord(BaseModel):
    """单个测试样本的指标。"""

    model_config = ConfigDict(frozen=True)

    id: str = Field(description="A 域样本 ID")
    ssim: float = Field(description="输出与参考图像在 B 域分辨率上的 SSIM")
    l_phi: float = Field(description="评估骨干特征上的平均 L1 距离")


class EvalReport(BaseModel):
    """
    测试集上的逐样本指标与平均值。

    Attributes:
        records: 逐样本记录
        avg_ssim: 平均 SSIM
        avg_l_phi: 平均感知距离
        n: 参与统计的样本数
        skipped: 因缺少配对参考而跳过的样本数
    """

    model_config = ConfigDict(frozen=True)

    format: str = Field(default=EVAL_FORMAT)
    records: list[EvalRecord] = Field(min_length=1)
    avg_ssim: float
    avg_l_phi: float
    n: int = Field(gt=0)
    skipped: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_aggregates(self) -> "EvalReport":
        if self.n != len(self.records):
            raise ValueError(f"n={self.n} 与记录数 {len(self.records)} 不一致")
        mean_ssim = sum(r.ssim for r in self.records) / self.n
        mean_l_phi = sum(r.l_phi for r in self.records) / self.n
        if (
            abs(mean_ssim - self.avg_ssim) > 1e-9
            or abs(mean_l_phi - self.avg_l_phi) > 1e-9
        ):
            raise ValueError("平均指标与逐样本记录不一致")
        return self

    @classmethod
    def from_records(cls, records: list[EvalRecord], skipped: int = 0) -> "EvalReport":
        n = len(records)
        return cls(
            records=records,
            avg_ssim=sum(r.ssim for r in records) / n if n else 0.0,
            avg_l_phi=sum(r.l_phi for r in records) / n if n else 0.0,
            n=n,
            skipped=skipped,
        )

    def summary_line(self) -> str:
        """标准输出上的机器可解析指标行。"""
        return f"avg_ssim={self.avg_ssim:.4f} avg_l_phi={self.avg_l_phi:.4f}"

    def aggregates(self) -> dict:
        """eval.json 的内容。"""
        return {
            "format": self.format,
            "avg_ssim": self.avg_ssim,
            "avg_l_phi": self.avg_l_phi,
            "n": self.n,
            "skipped": self.skipped,
        }
