#!/usr/bin/env python3
"""
RS 編碼快取工具
以誘導匹配分割建構線性分封包 (F = K) 的編碼快取方案，並以位元組層級模擬驗證
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from config import settings
from errors import EXIT_OK, EXIT_USAGE, CachingError, InputError
from routers import graphs, partitions, planner, simulation
from routers.common import parse_seed

logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """用法錯誤改為拋出 InputError（結束碼 1，而非 argparse 預設的 2）"""

    def error(self, message):
        raise InputError("usage", f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=parse_seed, default=0, help="隨機種子（PCG64，0 ≤ seed < 2^64）")
    common.add_argument("--out", help="輸出路徑")
    common.add_argument("--format", choices=["json", "table"], default=None, help="輸出格式")
    common.add_argument("--quiet", action="store_true", help="只輸出警告以上的日誌")

    parser = CliParser(
        prog="rs-caching",
        description="Ruzsa-Szemerédi 圖的編碼快取：圖產生、誘導匹配分割、方案參數與模擬",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CliParser)
    graphs.register(subparsers, common)
    partitions.register(subparsers, common)
    planner.register(subparsers, common)
    simulation.register(subparsers, common)
    return parser


def configure_logging(quiet: bool):
    level = logging.WARNING if quiet else getattr(logging, settings.LOG_LEVEL, logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )


def report_error(error: CachingError):
    """一行的錯誤診斷（stderr）"""
    print(json.dumps(error.to_dict(), ensure_ascii=False), file=sys.stderr)


def dispatch(argv: Optional[List[str]] = None) -> int:
    """解析命令列並路由到對應的命令，回傳結束碼"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except InputError as e:
        report_error(e)
        return e.exit_code
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    configure_logging(args.quiet)
    if getattr(args, "requires_out", False) and not args.out:
        report_error(InputError("usage", f"{args.command} 需要 --out"))
        return EXIT_USAGE

    try:
        return args.handler(args) or EXIT_OK
    except CachingError as e:
        logger.error(f"{args.command} 失敗 [{e.code}]: {e.detail}")
        report_error(e)
        return e.exit_code
    except Exception as e:
        logger.error(f"未處理的異常: {str(e)}", exc_info=True)
        report_error(CachingError("internal_error", f"內部錯誤: {str(e)}"))
        return EXIT_USAGE


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
