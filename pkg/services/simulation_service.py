"""
端到端模擬：建立圖與分割 → 放置 → 對需求集合做傳送與解碼 → 報告
"""

import hashlib
import itertools
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from fractions import Fraction
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from config import settings
from errors import CachingError, DecodeError, InputError, SizeError
from models import BaselineRow, SimConfig, SimReport, fraction_str
from services.ams_service import AmsParams, ams_graph
from services.caching_service import (
    DeliveryBatch,
    DemandVector,
    PacketLibrary,
    PlacementMap,
    UserCache,
    build_placement,
    build_user_cache,
    check_memory,
    decode_user_packets,
    encode_delivery,
)
from services.graph_service import Graph, random_graph
from services.partition_service import (
    RsPartition,
    exact_min_partition,
    greedy_partition,
    required_cache_ratio,
    verify_rs_partition,
)
from storage import load_batch, load_graph, load_partition, save_batch

logger = logging.getLogger(__name__)

FIXTURES = ("c6", "triangle", "k16-ams", "edgeless-4")
VOLATILE_FIELDS = ("wall_times", "timestamp", "report_digest", "batch_path")


def worst_case_demand_presets(K: int, N: int) -> List[DemandVector]:
    """全部相同、輪替 (k mod N) 與反向輪替，去除重複"""
    candidates = [
        [0] * K,
        [k % N for k in range(K)],
        [N - 1 - (k % N) for k in range(K)],
    ]
    presets: List[DemandVector] = []
    for candidate in candidates:
        vector = DemandVector(candidate)
        if vector not in presets:
            presets.append(vector)
    return presets


def demand_ensemble(cfg: SimConfig, K: int, N: int) -> Iterator[DemandVector]:
    """依設定產生需求向量（固定順序）"""
    if cfg.demand_mode == "exhaustive":
        if N ** K > cfg.exhaustive_limit:
            raise SizeError(
                "exhaustive_too_large",
                f"N^K = {N}^{K} 超過窮舉上限 {cfg.exhaustive_limit}",
                N=N, K=K, limit=cfg.exhaustive_limit
            )
        for combo in itertools.product(range(N), repeat=K):
            yield DemandVector(combo)
        return
    if cfg.demand_mode == "explicit":
        for vector in cfg.demands:
            yield DemandVector(vector).validate(K, N)
        return
    if cfg.demand_mode in ("presets", "mixed"):
        yield from worst_case_demand_presets(K, N)
    if cfg.demand_mode in ("random", "mixed"):
        rng = np.random.default_rng(cfg.seed + 1)
        draws = rng.integers(0, N, size=(cfg.demand_count, K))
        for row in draws:
            yield DemandVector(row.tolist())


def ingest_library(directory: str, K: int, B: int) -> PacketLibrary:
    """讀入目錄下的一般檔案（依檔名字典序），每個補零到 K·B 位元組"""
    if not os.path.isdir(directory):
        raise InputError("not_a_directory", f"不是目錄: {directory}", path=directory)
    names = sorted(
        name for name in os.listdir(directory)
        if os.path.isfile(os.path.join(directory, name))
    )
    if not names:
        raise InputError("empty_library", f"目錄 {directory} 沒有任何檔案", path=directory)
    blobs = []
    for name in names:
        with open(os.path.join(directory, name), "rb") as handle:
            blobs.append(handle.read())
    library = PacketLibrary.from_files(blobs, K, B, names=names)
    logger.info(f"檔案庫匯入完成: N={library.N}, K={K}, B={B}")
    return library


def fixture_path(name: str, suffix: str = "graph") -> str:
    if name not in FIXTURES:
        raise InputError("unknown_fixture", f"未知的 fixture: {name}（可用: {', '.join(FIXTURES)}）")
    return os.path.join(settings.FIXTURE_DIR, f"{name}.{suffix}")


def resolve_graph(cfg: SimConfig) -> Tuple[Graph, bool]:
    """回傳 (圖, 是否為放寬參數)"""
    if cfg.graph_source == "file":
        return load_graph(cfg.graph_path), False
    if cfg.graph_source == "fixture":
        return load_graph(fixture_path(cfg.fixture)), False
    if cfg.graph_source == "ams":
        params = AmsParams(cfg.ams_c, cfg.ams_n, relax=cfg.relax)
        return ams_graph(params, workers=cfg.workers), params.relaxed
    return random_graph(cfg.random_k, cfg.edge_prob, cfg.seed), False


def resolve_partition(cfg: SimConfig, graph: Graph) -> RsPartition:
    if cfg.partition_mode == "file":
        return load_partition(cfg.partition_path, graph)
    if cfg.partition_mode == "exact":
        return exact_min_partition(graph)
    return greedy_partition(graph)


def resolve_library(cfg: SimConfig, K: int) -> PacketLibrary:
    if cfg.library_source == "directory":
        return ingest_library(cfg.library_dir, K, cfg.B)
    return PacketLibrary.random(cfg.N, K, cfg.B, cfg.seed)


def _first_mismatch(expected: np.ndarray, actual: np.ndarray) -> int:
    rows = np.flatnonzero((expected != actual).any(axis=1))
    return int(rows[0]) if rows.size else -1


class _DemandOutcome:
    __slots__ = ("payloads", "consumed_max", "decodes")

    def __init__(self, payloads: int, consumed_max: int, decodes: int):
        self.payloads = payloads
        self.consumed_max = consumed_max
        self.decodes = decodes


def _serve_demand(d: DemandVector, graph: Graph, partition: RsPartition, pm: PlacementMap,
                  caches: Sequence[UserCache], library: PacketLibrary) -> _DemandOutcome:
    """對單一需求向量編碼並讓所有使用者解碼，逐位元組比對"""
    batch = encode_delivery(partition, d, library, workers=1)
    if batch.t != partition.t:
        raise DecodeError("payload_count", f"負載數 {batch.t} 不等於 t={partition.t}", demands=list(d))
    consumed_max = _decode_all(batch, graph, partition, pm, caches, library)
    return _DemandOutcome(batch.t, consumed_max, graph.vertex_count)


def _decode_all(batch: DeliveryBatch, graph: Graph, partition: RsPartition, pm: PlacementMap,
                caches: Sequence[UserCache], library: PacketLibrary) -> int:
    d = batch.demands
    consumed_max = 0
    for k in range(graph.vertex_count):
        packets, consumed = decode_user_packets(k, batch, pm, caches[k], partition, graph)
        mismatch = _first_mismatch(library.data[d[k]], packets)
        if mismatch >= 0:
            raise DecodeError(
                "decode_mismatch",
                f"使用者 {k} 在需求 {list(d)} 下解出的封包 {mismatch} 與原檔不符",
                user=k, demands=list(d), packet=mismatch
            )
        consumed_max = max(consumed_max, consumed)
    return consumed_max


def replay_batch(path: str, d: DemandVector, graph: Graph, partition: RsPartition, pm: PlacementMap,
                 caches: Sequence[UserCache], library: PacketLibrary) -> str:
    """寫出需求 d 的傳送批次，從檔案讀回後讓所有使用者再解碼一次"""
    save_batch(encode_delivery(partition, d, library, workers=1), path)
    _decode_all(load_batch(path), graph, partition, pm, caches, library)
    logger.info(f"傳送批次已寫入並重播成功: {path}")
    return path


def mask_volatile(report: dict) -> dict:
    return {key: value for key, value in report.items() if key not in VOLATILE_FIELDS}


def report_digest(report: SimReport) -> str:
    masked = mask_volatile(report.model_dump(mode="json"))
    text = json.dumps(masked, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_simulation(cfg: SimConfig) -> SimReport:
    """執行完整模擬；任何解碼錯誤都會中止並指出 (使用者, 需求, 封包)"""
    wall_times = {}
    started = time.perf_counter()
    graph, relaxed = resolve_graph(cfg)
    wall_times["graph"] = time.perf_counter() - started

    mark = time.perf_counter()
    partition = resolve_partition(cfg, graph)
    params = verify_rs_partition(graph, partition, workers=cfg.workers)
    wall_times["partition"] = time.perf_counter() - mark

    mark = time.perf_counter()
    K = graph.vertex_count
    library = resolve_library(cfg, K)
    if library.K != K:
        raise InputError("dimension_mismatch", f"檔案庫封包數 {library.K} 不等於 K={K}")
    pm = build_placement(graph)
    mn_required = required_cache_ratio(graph)
    if not check_memory(pm, library.N, mn_required):
        raise DecodeError("memory_violation", f"快取不滿足 M/N = {mn_required} 的記憶體限制")
    caches = [build_user_cache(k, pm, library) for k in range(K)]
    wall_times["placement"] = time.perf_counter() - mark

    mark = time.perf_counter()
    demands = list(demand_ensemble(cfg, K, library.N))
    for d in demands:
        d.validate(K, library.N)

    def serve(d: DemandVector) -> _DemandOutcome:
        return _serve_demand(d, graph, partition, pm, caches, library)

    try:
        if cfg.workers > 1 and len(demands) > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
                outcomes = list(executor.map(serve, demands))
        else:
            outcomes = [serve(d) for d in demands]
    except CachingError as e:
        logger.error(f"模擬中止: {e.detail}")
        raise
    wall_times["delivery"] = time.perf_counter() - mark

    batch_path = None
    if cfg.batch_out:
        if demands:
            batch_path = replay_batch(cfg.batch_out, demands[0], graph, partition, pm, caches, library)
        else:
            logger.warning(f"需求集合為空，未寫出傳送批次 {cfg.batch_out}")

    payload_counts = {outcome.payloads for outcome in outcomes}
    if len(payload_counts) > 1:
        raise DecodeError("rate_not_invariant", f"不同需求下的負載數不一致: {sorted(payload_counts)}")

    rate = Fraction(params.t, K)
    uncoded = K * (1 - mn_required)
    cache_counts = pm.per_file_count
    report = SimReport(
        K=K,
        F=K,
        N=library.N,
        B=library.B,
        t=params.t,
        r_avg=params.r_avg,
        r_min=params.min_size,
        r_max=params.max_size,
        rate_R=fraction_str(rate),
        rate_R_value=float(rate),
        mn_required=fraction_str(mn_required),
        mn_required_value=float(mn_required),
        cache_packets_per_user=cache_counts,
        cached_bytes_per_user=[cache.cached_bytes() for cache in caches],
        payload_bytes_total=params.t * library.B,
        uncoded_baseline_rate=fraction_str(uncoded),
        uncoded_baseline_rate_value=float(uncoded),
        naive_rate=K,
        demand_count=len(demands),
        decode_ok=True,
        user_decodes=sum(outcome.decodes for outcome in outcomes),
        payloads_consumed_max=max((o.consumed_max for o in outcomes), default=0),
        relaxed=relaxed,
        seeds={"seed": cfg.seed, "demand_seed": cfg.seed + 1},
        graph_digest=graph.digest(),
        partition_digest=partition.digest(),
        wall_times={key: round(value, 6) for key, value in wall_times.items()},
        timestamp=datetime.now(timezone.utc).isoformat(),
        batch_path=batch_path,
    )
    report.report_digest = report_digest(report)
    logger.info(
        f"模擬完成: K={K}, t={params.t}, R={report.rate_R}, 需求數={len(demands)}, 全部解碼成功"
    )
    return report


def compare_baselines(report: SimReport) -> List[BaselineRow]:
    """RS 方案、未編碼快取 K(1−M/N) 與不使用快取 K，依傳輸率排序"""
    F, B = report.F, report.B
    candidates = [
        ("rs-scheme", Fraction(report.rate_R)),
        ("uncoded", Fraction(report.uncoded_baseline_rate)),
        ("naive", Fraction(report.naive_rate)),
    ]
    rows = [
        BaselineRow(
            scheme=name,
            rate=fraction_str(rate),
            rate_value=float(rate),
            total_bytes=int(rate * F * B),
        )
        for name, rate in candidates
    ]
    # sorted 為穩定排序，同率時保留原順序
    return sorted(rows, key=lambda row: Fraction(row.rate))
