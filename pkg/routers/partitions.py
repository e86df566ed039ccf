import argparse
import logging

from routers.common import emit
from services.caching_service import scheme_params
from services.partition_service import exact_min_partition, greedy_partition, verify_rs_partition
from storage import load_graph, load_partition, save_partition

logger = logging.getLogger(__name__)


def register(subparsers, common: argparse.ArgumentParser):
    """註冊分割、驗證與方案參數命令"""
    parser = subparsers.add_parser(
        "partition",
        parents=[common],
        help="把邊集合分割成誘導匹配",
        description=(
            "greedy：依字典序掃描邊，維持誘導性質（可重現）。"
            "exact：回溯窮舉最小 t，僅適用於小圖（|E| ≤ --edge-limit）。"
            "分割檔格式：每行 `m: u v; u v; ...`，m 從 0 開始。"
        ),
    )
    parser.add_argument("-g", "--graph", required=True, help="邊列表檔")
    parser.add_argument("--mode", choices=["greedy", "exact"], default="greedy")
    parser.add_argument("--edge-limit", type=int, default=None, help="exact 模式的邊數上限（預設 RS_EXACT_EDGE_LIMIT）")
    parser.set_defaults(handler=handle_partition, requires_out=True)

    parser = subparsers.add_parser(
        "verify",
        parents=[common],
        help="驗證分割並輸出 r、t",
        description="檢查每個匹配為誘導匹配、匹配兩兩邊不相交且聯集恰為邊集合。失敗時結束碼為 2。",
    )
    parser.add_argument("-g", "--graph", required=True, help="邊列表檔")
    parser.add_argument("-p", "--partition", required=True, help="分割檔")
    parser.set_defaults(handler=handle_verify)

    parser = subparsers.add_parser(
        "scheme-info",
        parents=[common],
        help="輸出快取方案參數 R = t/K、F = K 與最小 M/N",
        description="放置：非邊 {i, j} 代表使用者 j 存下所有檔案的第 i 個封包；每個誘導匹配對應一次 XOR 傳送。",
    )
    parser.add_argument("-g", "--graph", required=True, help="邊列表檔")
    parser.add_argument("-p", "--partition", required=True, help="分割檔")
    parser.set_defaults(handler=handle_scheme_info)


def handle_partition(args: argparse.Namespace) -> int:
    graph = load_graph(args.graph)
    if args.mode == "exact":
        partition = exact_min_partition(graph, args.edge_limit)
    else:
        partition = greedy_partition(graph)
    params = verify_rs_partition(graph, partition)
    save_partition(partition, args.out)
    emit(args, params, f"r={params.r_avg} t={params.t}", out_is_artifact=True)
    return 0


def handle_verify(args: argparse.Namespace) -> int:
    """驗證分割檔"""
    graph = load_graph(args.graph)
    partition = load_partition(args.partition, graph)
    params = verify_rs_partition(graph, partition)
    text = f"r={params.r_avg} t={params.t} min={params.min_size} max={params.max_size}"
    emit(args, params, text, default_format="table")
    return 0


def handle_scheme_info(args: argparse.Namespace) -> int:
    graph = load_graph(args.graph)
    partition = load_partition(args.partition, graph)
    params = scheme_params(graph, partition)
    text = f"R={params.rate} F={params.F} K={params.K} t={params.t} M/N≥{params.mn_required}"
    emit(args, params, text, default_format="table")
    return 0
