"""
命令行应用工厂。

本模块创建并配置 argparse 解析器，注册所有子命令，
并提供全局异常处理：把异常转换为稳定的退出码和一行结构化错误输出。

退出码约定：
- 0 成功
- 1 I/O 或未预期的错误
- 2 用法/配置错误
- 3 数值中止（非有限损失）
- 4 产物加载失败（检查点）
"""

import argparse
import logging
import sys
from collections.abc import Sequence

from .commands import register_commands
from .core import ThermcalError, get_settings

logger = logging.getLogger(__name__)

EXIT_UNEXPECTED = 1
EXIT_INTERRUPTED = 130


def create_app() -> argparse.ArgumentParser:
    """
    创建并配置命令行解析器。

    Returns:
        argparse.ArgumentParser: 带有 synth/train/eval/translate 子命令的解析器

    Example:
        >>> parser = create_app()
        >>> args = parser.parse_args(["synth", "--out", "data/fixture"])
    """
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description=settings.APP_DESCRIPTION,
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"{settings.APP_NAME} {settings.APP_VERSION}",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    register_commands(subparsers)
    return parser


def report_error(error: str, message: str) -> None:
    """在 stderr 上输出一行 error=<code> message=<text>。"""
    text = " ".join(str(message).split())
    print(f"error={error} message={text}", file=sys.stderr)


def run(argv: Sequence[str] | None = None) -> int:
    """
    解析参数并执行子命令，返回退出码。

    所有异常都在这里处理，不会向调用方抛出。
    在调试模式下，未预期的异常会附带完整堆栈写入日志。

    Args:
        argv: 命令行参数（不含程序名），None 时读取 sys.argv

    Returns:
        int: 进程退出码
    """
    settings = get_settings()
    parser = create_app()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 的用法错误为 2，--help / --version 为 0
        return int(e.code or 0)

    try:
        return int(args.func(args))
    except ThermcalError as e:
        logger.error(
            f"{args.command} 失败: {e.message}",
            extra={"error": e.error, **e.context},
            exc_info=settings.DEBUG,
        )
        report_error(e.error, e.message)
        return e.exit_code
    except KeyboardInterrupt:
        report_error("interrupted", "用户中断")
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.error(f"{args.command} 出现未预期的错误: {e}", exc_info=True)
        detail = str(e) if settings.DEBUG else f"{type(e).__name__}: {e}"
        report_error("internal-error", detail)
        return EXIT_UNEXPECTED
