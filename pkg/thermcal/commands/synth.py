"""synth 子命令：写出合成 A/B 配对、RGB 条件与清单。"""

import argparse
import logging

from ..models import parse_resolution
from ..services.synthetic import write_synthetic_dataset

logger = logging.getLogger(__name__)


def cmd_synth(args: argparse.Namespace) -> int:
    """
    生成合成数据集。

    Example:
        ```
        thermcal synth --out data/fixture --n 16 --seed 1 --res 64x64
        ```
    """
    manifest = write_synthetic_dataset(
        args.out,
        n=args.n,
        seed=args.seed,
        resolution=parse_resolution(args.res),
        n_blobs=args.blobs,
        val_frac=args.val_frac,
        test_frac=args.test_frac,
    )
    print(f"manifest={manifest}")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("synth", help="生成合成配对数据集")
    parser.add_argument("--out", required=True, help="输出目录")
    parser.add_argument("--n", type=int, default=16, help="配对数量 (默认: 16)")
    parser.add_argument("--seed", type=int, default=0, help="随机种子 (默认: 0)")
    parser.add_argument("--res", default="64x64", help="B 域分辨率 HxW (默认: 64x64)")
    parser.add_argument("--blobs", type=int, default=3, help="每幅图的热斑数 (默认: 3)")
    parser.add_argument("--val-frac", type=float, default=0.05, help="验证集比例")
    parser.add_argument("--test-frac", type=float, default=0.05, help="测试集比例")
    parser.set_defaults(func=cmd_synth)
