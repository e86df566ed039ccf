import argparse
import logging

from pydantic import ValidationError

from config import settings
from errors import InputError
from models import SimConfig
from routers.common import emit, parse_demand, render_table
from services.simulation_service import FIXTURES, compare_baselines, ingest_library, run_simulation
from storage import save_manifest

logger = logging.getLogger(__name__)


def register(subparsers, common: argparse.ArgumentParser):
    """註冊模擬與檔案庫匯入命令"""
    parser = subparsers.add_parser(
        "simulate",
        parents=[common],
        help="放置 → XOR 傳送 → 解碼的端到端模擬",
        description=(
            "對需求集合中的每個需求向量，所有使用者都必須逐位元組還原所需檔案。"
            "結束碼：0 成功、2 分割驗證失敗、3 解碼不符、1 用法錯誤。"
            "--format table 輸出與未編碼快取 K(1−M/N) 及不使用快取 K 的比較表。"
        ),
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("-g", "--graph", help="邊列表檔")
    source.add_argument("--fixture", choices=FIXTURES, help="內建 fixture（預設 c6）")
    source.add_argument("--ams", nargs=2, type=int, metavar=("C", "N"), help="AMS 距離門檻圖")
    source.add_argument("--random", nargs=2, metavar=("K", "P"), help="隨機圖 G(K, p)，種子為 --seed")
    parser.add_argument("--relax", action="store_true", help="AMS 參數放寬")
    parser.add_argument("--partition-mode", choices=["greedy", "exact", "file"], default=None)
    parser.add_argument("-p", "--partition", help="分割檔（隱含 --partition-mode file）")
    parser.add_argument("-N", "--files", type=int, default=2, help="檔案數 N")
    parser.add_argument("-B", "--packet-bytes", type=int, default=None, help="封包大小（預設 RS_PACKET_BYTES）")
    parser.add_argument(
        "--demands", choices=["exhaustive", "random", "explicit", "presets", "mixed"], default=None,
        help="需求集合（預設 exhaustive；給定 --demand 時為 explicit）"
    )
    parser.add_argument("--count", type=int, default=1000, help="random / mixed 的隨機需求數")
    parser.add_argument("--demand", type=parse_demand, action="append", default=[],
                        help="明確的需求向量，例如 0,1,0,1,0,1（可重複）")
    parser.add_argument("--library-dir", help="從目錄匯入檔案庫（否則以 --seed 產生隨機檔案庫）")
    parser.add_argument("--workers", type=int, default=None, help="平行處理需求向量的執行緒數")
    parser.add_argument("--batch-out", help="寫出第一個需求向量的傳送批次，並從檔案重播解碼")
    parser.set_defaults(handler=handle_simulate)

    parser = subparsers.add_parser(
        "ingest",
        parents=[common],
        help="匯入目錄為檔案庫並寫出清單",
        description="依檔名字典序讀入一般檔案，每個補零到 K·B 位元組；--out 寫入檔案庫清單 (JSON)。",
    )
    parser.add_argument("--dir", required=True, help="檔案目錄")
    parser.add_argument("--k", type=int, required=True, help="使用者數 K（= 每檔封包數 F）")
    parser.add_argument("--b", type=int, default=None, help="封包大小 B（預設 RS_PACKET_BYTES）")
    parser.set_defaults(handler=handle_ingest, requires_out=True)


def build_sim_config(args: argparse.Namespace) -> SimConfig:
    fields = {
        "N": args.files,
        "B": args.packet_bytes or settings.PACKET_BYTES,
        "seed": args.seed,
        "relax": args.relax,
        "demand_count": args.count,
        "demands": args.demand,
        "exhaustive_limit": settings.EXHAUSTIVE_LIMIT,
        "workers": args.workers or settings.WORKERS,
        "batch_out": args.batch_out,
    }
    if args.graph:
        fields.update(graph_source="file", graph_path=args.graph)
    elif args.ams:
        fields.update(graph_source="ams", ams_c=args.ams[0], ams_n=args.ams[1])
    elif args.random:
        try:
            fields.update(graph_source="random", random_k=int(args.random[0]), edge_prob=float(args.random[1]))
        except ValueError:
            raise InputError("bad_arguments", f"--random 需要 K（整數）與 P（實數）: {args.random}")
    else:
        fields.update(graph_source="fixture", fixture=args.fixture or "c6")

    if args.partition:
        fields.update(partition_mode="file", partition_path=args.partition)
    elif args.partition_mode:
        fields["partition_mode"] = args.partition_mode

    if args.demands:
        fields["demand_mode"] = args.demands
    elif args.demand:
        fields["demand_mode"] = "explicit"

    if args.library_dir:
        fields.update(library_source="directory", library_dir=args.library_dir)

    try:
        return SimConfig(**fields)
    except ValidationError as e:
        raise InputError("bad_config", f"模擬設定無效: {e.errors()[0].get('msg')}")


def handle_simulate(args: argparse.Namespace) -> int:
    """執行模擬並輸出報告或比較表"""
    cfg = build_sim_config(args)
    report = run_simulation(cfg)
    rows = compare_baselines(report)
    table = render_table(
        ["scheme", "rate", "total_bytes"],
        [[row.scheme, row.rate, row.total_bytes] for row in rows],
    )
    emit(args, report, table)
    return 0


def handle_ingest(args: argparse.Namespace) -> int:
    library = ingest_library(args.dir, args.k, args.b or settings.PACKET_BYTES)
    manifest = library.manifest()
    save_manifest(manifest, args.out)
    emit(args, manifest, f"N={manifest.N} K={manifest.K} B={manifest.B}", out_is_artifact=True)
    return 0
