"""eval 子命令：测试集指标、逐样本 CSV 与定性对比图。"""

import argparse
import logging
from pathlib import Path

from ..services.checkpoint import read_metadata, resolve_checkpoint
from ..services.dataset import load_manifest
from ..services.evaluation import (
    evaluate,
    grid_samples,
    qualitative_grid,
    write_eval_report,
)

logger = logging.getLogger(__name__)

GRID_FILE = "grid.png"


def cmd_eval(args: argparse.Namespace) -> int:
    """
    评估检查点，并在标准输出打印 avg_ssim=<v> avg_l_phi=<v>。

    Example:
        ```
        thermcal eval --checkpoint runs/fixture --manifest data/fixture/manifest.csv \\
            --out runs/fixture/eval
        ```
    """
    checkpoint = resolve_checkpoint(args.checkpoint)
    metadata = read_metadata(checkpoint)
    manifest = load_manifest(args.manifest)

    report = evaluate(checkpoint, manifest, split=args.split)
    write_eval_report(report, args.out)
    samples = grid_samples(manifest, metadata, split=args.split, limit=args.grid_rows)
    qualitative_grid(checkpoint, samples, Path(args.out) / GRID_FILE)

    print(report.summary_line())
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="评估检查点")
    parser.add_argument("--checkpoint", required=True, help="检查点目录或运行目录")
    parser.add_argument("--manifest", required=True, help="含配对测试集的清单")
    parser.add_argument("--out", required=True, help="输出目录")
    parser.add_argument(
        "--split", default="test", choices=("train", "val", "test"), help="评估划分"
    )
    parser.add_argument("--grid-rows", type=int, default=4, help="对比图行数 (默认: 4)")
    parser.set_defaults(func=cmd_eval)
