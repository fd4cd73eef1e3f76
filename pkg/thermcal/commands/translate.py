"""translate 子命令：用 G_AB 翻译单张红外图像。"""

import argparse
import logging

from ..core.errors import ShapeError
from ..services.checkpoint import resolve_checkpoint
from ..services.dataset import decode_image, save_image
from ..services.evaluation import Translator

logger = logging.getLogger(__name__)


def cmd_translate(args: argparse.Namespace) -> int:
    """
    按输入的原始尺寸翻译，输出为 B 域分辨率的 PNG。

    未给出 --rgb 时使用零占位条件，与显式传入全黑图像结果相同。
    """
    ir = decode_image(args.input)
    rgb = None
    if args.rgb is not None:
        rgb = decode_image(args.rgb)
        if rgb.shape != ir.shape:
            raise ShapeError(
                f"--rgb 尺寸 {tuple(rgb.shape[-2:])} 与 --input 尺寸 "
                f"{tuple(ir.shape[-2:])} 不一致"
            )

    translator = Translator(resolve_checkpoint(args.checkpoint))
    output = translator(ir, rgb)
    path = save_image(output.clamp(0.0, 1.0), args.out)
    logger.info(
        f"已翻译 {args.input} → {path}",
        extra={
            "input_size": tuple(ir.shape[-2:]),
            "output_size": tuple(output.shape[-2:]),
        },
    )
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("translate", help="翻译单张红外图像")
    parser.add_argument("--checkpoint", required=True, help="检查点目录或运行目录")
    parser.add_argument("--input", required=True, help="A 域红外图像")
    parser.add_argument("--rgb", default=None, help="同尺寸的 RGB 条件图像 (可选)")
    parser.add_argument("--out", required=True, help="输出 PNG 路径")
    parser.set_defaults(func=cmd_translate)
