"""
应用启动和入口点。

本模块提供 thermcal 命令的主入口点：根据设置配置日志，然后交给 app.run 执行。
"""

import logging
import sys

from .app import run
from .core import get_settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging() -> None:
    """
    按 Settings.LOG_LEVEL 配置根日志记录器，输出到 stderr。

    DEBUG 模式强制使用 debug 级别。
    """
    settings = get_settings()
    level = logging.DEBUG if settings.DEBUG else settings.LOG_LEVEL.upper()
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main() -> None:
    """
    应用的主入口点。

    加载设置、配置日志并执行子命令，以子命令的退出码退出进程。
    """
    configure_logging()
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
