"""train 子命令：按清单和配置文件训练，写出运行目录。"""

import argparse
import logging

from ..models import TrainConfigFile
from ..services.dataset import load_manifest
from ..services.training import train

logger = logging.getLogger(__name__)


def cmd_train(args: argparse.Namespace) -> int:
    """
    训练一次运行。

    配置文件错误、空数据划分在任何计算之前失败（退出码 2），
    非有限损失中止训练（退出码 3）。

    Example:
        ```
        thermcal train --manifest data/fixture/manifest.csv \\
            --config configs/fixture.conf --out runs/fixture
        ```
    """
    cfg = TrainConfigFile.load(args.config).to_train_config()
    manifest = load_manifest(args.manifest)
    run_dir = train(manifest, cfg, args.out, resume=args.resume)
    print(f"run_dir={run_dir}")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="训练非对称 CycleGAN")
    parser.add_argument("--manifest", required=True, help="清单 CSV 路径")
    parser.add_argument(
        "--config", default=None, help="key=value 配置文件 (默认: 全部取默认值)"
    )
    parser.add_argument("--out", required=True, help="运行目录")
    parser.add_argument(
        "--resume", action="store_true", help="从运行目录中最新的检查点继续"
    )
    parser.set_defaults(func=cmd_train)
