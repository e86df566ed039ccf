import argparse
import logging

from errors import CachingError, InputError
from routers.common import emit
from services.ams_service import AmsParams, ams_graph, ams_report
from services.graph_service import random_graph
from storage import save_graph

logger = logging.getLogger(__name__)


def register(subparsers, common: argparse.ArgumentParser):
    """註冊圖產生相關命令"""
    parser = subparsers.add_parser(
        "gen-ams",
        parents=[common],
        help="產生 [C]^n 上的距離門檻圖",
        description=(
            "頂點為 {0..C-1}^n 的座標（最高位在前的混合基數編碼），"
            "當 |‖u−v‖² − n(C²−1)/6| < n 時 u、v 相鄰。"
            "預設要求 C ≥ 2、n 為偶數且 n ≥ 2C；--relax 可放寬，結果會標記 relaxed。"
            "輸出：--out 寫入邊列表檔，標準輸出為度數量測與漸近公式報告 (JSON)。"
        ),
    )
    parser.add_argument("--c", type=int, required=True, help="字母表大小 C")
    parser.add_argument("--n", type=int, required=True, help="維度 n")
    parser.add_argument("--relax", action="store_true", help="放寬 n 偶數 / n ≥ 2C / C ≥ 2 的限制")
    parser.add_argument("--budget", type=int, default=None, help="頂點預算（預設 RS_VERTEX_BUDGET）")
    parser.set_defaults(handler=handle_gen_ams, requires_out=True)

    parser = subparsers.add_parser(
        "gen-random",
        parents=[common],
        help="產生隨機圖 G(K, p)",
        description="以 --seed 為種子 (PCG64) 依字典序對每一對頂點抽樣；--out 寫入邊列表檔。",
    )
    parser.add_argument("--k", type=int, required=True, help="頂點數 K")
    parser.add_argument("--p", type=float, required=True, help="邊機率")
    parser.set_defaults(handler=handle_gen_random, requires_out=True)


def handle_gen_ams(args: argparse.Namespace) -> int:
    """產生 AMS 圖並輸出量測報告"""
    try:
        params = AmsParams(args.c, args.n, relax=args.relax)
        graph = ams_graph(params, vertex_budget=args.budget)
        report = ams_report(graph, params)
        save_graph(graph, args.out)
    except CachingError:
        raise
    except Exception as e:
        logger.error(f"AMS 圖產生失敗: {str(e)}")
        raise InputError("gen_ams_failed", f"AMS 圖產生失敗: {str(e)}")
    text = (
        f"K={report.K} |E|={report.edge_count} min_degree={report.min_degree} "
        f"bound={report.min_degree_bound:.3f} holds={report.min_degree_bound_holds}"
    )
    emit(args, report, text, out_is_artifact=True)
    return 0


def handle_gen_random(args: argparse.Namespace) -> int:
    graph = random_graph(args.k, args.p, args.seed)
    save_graph(graph, args.out)
    payload = {"K": graph.vertex_count, "edges": graph.edge_count, "seed": args.seed, "digest": graph.digest()}
    emit(args, payload, f"K={graph.vertex_count} |E|={graph.edge_count}", out_is_artifact=True)
    return 0
