"""命令共用的輸出工具"""

import argparse
import json
import os
import sys
from typing import List, Optional, Sequence

from pydantic import BaseModel


def to_jsonable(payload):
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, list):
        return [to_jsonable(item) for item in payload]
    return payload


def render_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)


def output_format(args: argparse.Namespace, default: str) -> str:
    return args.format or default


def emit(args: argparse.Namespace, payload, text: Optional[str] = None,
         default_format: str = "json", out_is_artifact: bool = False):
    """依 --format 輸出 JSON 或文字；--out 非產出檔時寫入檔案"""
    if output_format(args, default_format) == "table" and text is not None:
        rendered = text
    else:
        rendered = json.dumps(to_jsonable(payload), ensure_ascii=False, sort_keys=True)
    target = None if out_is_artifact else getattr(args, "out", None)
    if target:
        directory = os.path.dirname(os.path.abspath(target))
        os.makedirs(directory, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(rendered + "\n")
    else:
        sys.stdout.write(rendered + "\n")


def parse_demand(text: str) -> List[int]:
    try:
        return [int(token) for token in text.replace(" ", "").split(",") if token != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"需求向量必須是逗號分隔的整數: {text!r}")


def parse_seed(text: str) -> int:
    """u64 種子"""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"種子必須是整數: {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"種子必須在 [0, 2^64): {value}")
    return value
