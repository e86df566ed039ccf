"""
檔案格式的讀寫：圖（邊列表）、分割、傳送批次與檔案庫清單
讀取時驗證所有結構不變量，錯誤訊息附上行號
"""

import json
import logging
import os
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from errors import InputError, VerificationError
from models import BatchHeader, LibraryManifest
from services.caching_service import DeliveryBatch, DemandVector
from services.graph_service import Graph, GraphBuilder, Matching, canonical_edge
from services.partition_service import RsPartition

logger = logging.getLogger(__name__)


def _content_lines(text: str):
    """逐行產生 (行號, 內容)，略過空行與 # 註解"""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield number, line


def _parse_int(token: str, number: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise InputError("malformed_line", f"第 {number} 行: {what} 不是整數: {token!r}", line=number)


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as e:
        raise InputError("file_unreadable", f"無法讀取檔案 {path}: {e}", path=path)


def _write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


# 圖

def parse_graph(text: str) -> Graph:
    lines = _content_lines(text)
    header = next(lines, None)
    if header is None:
        raise InputError("missing_header", "缺少 `K <整數>` 標頭")
    number, line = header
    tokens = line.split()
    if len(tokens) != 2 or tokens[0] != "K":
        raise InputError("missing_header", f"第 {number} 行: 標頭必須是 `K <整數>`: {line!r}", line=number)
    k = _parse_int(tokens[1], number, "K")
    if k < 1:
        raise InputError("bad_vertex_count", f"第 {number} 行: K 必須為正整數: {k}", line=number)

    builder = GraphBuilder(k)
    for number, line in lines:
        tokens = line.split()
        if len(tokens) != 2:
            raise InputError("malformed_line", f"第 {number} 行: 邊必須是 `u v`: {line!r}", line=number)
        u = _parse_int(tokens[0], number, "u")
        v = _parse_int(tokens[1], number, "v")
        if u > v:
            raise InputError("non_canonical_edge", f"第 {number} 行: 邊必須寫成 u < v: {line!r}", line=number)
        builder.add_edge(u, v, line=number)
    return builder.freeze()


def load_graph(path: str) -> Graph:
    graph = parse_graph(_read_text(path))
    logger.info(f"已載入圖 {path}: K={graph.vertex_count}, |E|={graph.edge_count}")
    return graph


def save_graph(graph: Graph, path: str):
    _write_text(path, graph.canonical_text())
    logger.info(f"已寫入圖 {path}")


# 分割

def parse_partition(text: str, graph: Optional[Graph] = None) -> RsPartition:
    """解析 `m: u v; u v; ...`；給定 graph 時檢查每條邊恰好出現一次"""
    matchings: List[Matching] = []
    owner: Dict[Tuple[int, int], int] = {}
    for number, line in _content_lines(text):
        head, sep, body = line.partition(":")
        if not sep:
            raise InputError("malformed_line", f"第 {number} 行: 缺少 `m:` 前綴: {line!r}", line=number)
        index = _parse_int(head.strip(), number, "匹配編號")
        if index != len(matchings):
            raise InputError(
                "bad_matching_id",
                f"第 {number} 行: 匹配編號應為 {len(matchings)}，實際為 {index}",
                line=number
            )
        edges = []
        for chunk in body.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            tokens = chunk.split()
            if len(tokens) != 2:
                raise InputError("malformed_line", f"第 {number} 行: 邊必須是 `u v`: {chunk!r}", line=number)
            u = _parse_int(tokens[0], number, "u")
            v = _parse_int(tokens[1], number, "v")
            edge = canonical_edge(u, v)
            if graph is not None:
                if u == v or not graph.has_edge(u, v):
                    raise VerificationError(
                        "edge_not_in_graph",
                        f"第 {number} 行: 邊 {u}-{v} 不在圖中",
                        matching_index=index, edge=edge, line=number
                    )
                if edge in owner:
                    raise VerificationError(
                        "edge_covered_twice",
                        f"第 {number} 行: 邊 {edge[0]}-{edge[1]} 已出現在匹配 {owner[edge]}",
                        matching_index=index, edge=edge, line=number
                    )
                owner[edge] = index
            edges.append(edge)
        matchings.append(Matching(edges))

    if graph is not None:
        for edge in graph.edges:
            if edge not in owner:
                raise VerificationError(
                    "edge_uncovered", f"邊 {edge[0]}-{edge[1]} 未出現在分割檔中", edge=edge
                )
    return RsPartition(matchings)


def load_partition(path: str, graph: Optional[Graph] = None) -> RsPartition:
    partition = parse_partition(_read_text(path), graph)
    logger.info(f"已載入分割 {path}: t={partition.t}")
    return partition


def save_partition(partition: RsPartition, path: str):
    _write_text(path, partition.canonical_text())
    logger.info(f"已寫入分割 {path}")


# 傳送批次：一行 JSON 標頭，接著 t 個 B 位元組的原始負載

def save_batch(batch: DeliveryBatch, path: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(batch.header.model_dump_json().encode("utf-8") + b"\n")
        handle.write(batch.payloads.tobytes())


def load_batch(path: str) -> DeliveryBatch:
    try:
        with open(path, "rb") as handle:
            header_line = handle.readline()
            body = handle.read()
    except OSError as e:
        raise InputError("file_unreadable", f"無法讀取批次檔 {path}: {e}", path=path)
    try:
        header = BatchHeader.model_validate_json(header_line)
    except ValidationError as e:
        raise InputError("bad_batch", f"批次標頭格式錯誤: {e}", path=path)
    DemandVector(header.demands).validate(header.K, header.N)
    if len(body) % header.B != 0:
        raise InputError("bad_batch", f"負載長度 {len(body)} 不是 B={header.B} 的倍數", path=path)
    payloads = np.frombuffer(body, dtype=np.uint8).reshape(-1, header.B).copy()
    return DeliveryBatch(header, payloads)


# 檔案庫清單

def save_manifest(manifest: LibraryManifest, path: str):
    _write_text(path, manifest.model_dump_json(indent=2) + "\n")


def load_manifest(path: str) -> LibraryManifest:
    try:
        return LibraryManifest.model_validate(json.loads(_read_text(path)))
    except (ValueError, ValidationError) as e:
        raise InputError("bad_manifest", f"檔案庫清單格式錯誤: {e}", path=path)
