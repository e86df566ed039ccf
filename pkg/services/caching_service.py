"""
快取方案：放置 (placement)、XOR 傳送編碼與使用者端解碼

封包定址為 (packet index, file)：每個檔案切成 F = K 個封包，每個封包 B 位元組。
使用者 j 快取所有檔案的第 i 個封包，當且僅當 i = j 或 {i, j} 不是邊。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from errors import DecodeError, InputError
from models import BatchHeader, LibraryManifest, SchemeParams, fraction_str
from services.graph_service import Graph
from services.partition_service import RsPartition, required_cache_ratio, verify_rs_partition

logger = logging.getLogger(__name__)


class PlacementMap:
    """每位使用者快取的封包編號集合（對所有檔案相同，只存一份）"""

    def __init__(self, K: int, cached_packets: Sequence[FrozenSet[int]]):
        self.K = K
        self.cached_packets: Tuple[FrozenSet[int], ...] = tuple(cached_packets)

    @property
    def per_file_count(self) -> List[int]:
        return [len(packets) for packets in self.cached_packets]

    def __repr__(self):
        return f"<PlacementMap(K={self.K}, per_file_count={self.per_file_count})>"


class DemandVector:
    def __init__(self, d: Sequence[int]):
        self.d: Tuple[int, ...] = tuple(int(x) for x in d)

    def validate(self, K: int, N: int) -> "DemandVector":
        if len(self.d) != K:
            raise InputError("bad_demands", f"需求向量長度 {len(self.d)} 不等於 K={K}", demands=list(self.d))
        for k, file in enumerate(self.d):
            if not 0 <= file < N:
                raise InputError(
                    "bad_demands", f"使用者 {k} 的需求 {file} 超出 [0, {N})", demands=list(self.d)
                )
        return self

    def __getitem__(self, k: int) -> int:
        return self.d[k]

    def __len__(self) -> int:
        return len(self.d)

    def __iter__(self):
        return iter(self.d)

    def __eq__(self, other) -> bool:
        if isinstance(other, DemandVector):
            return self.d == other.d
        if isinstance(other, (tuple, list)):
            return self.d == tuple(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.d)

    def __repr__(self):
        return f"<DemandVector({list(self.d)})>"


class PacketLibrary:
    """N 個檔案 × K 個封包 × B 位元組"""

    def __init__(self, data: np.ndarray, original_lengths: Sequence[int],
                 seed: Optional[int] = None, source_paths: Sequence[str] = ()):
        if data.ndim != 3 or data.dtype != np.uint8:
            raise InputError("bad_library", f"封包陣列必須是 uint8 的 (N, K, B)，實際為 {data.dtype} {data.shape}")
        self.data = data
        self.data.setflags(write=False)
        self.original_lengths: Tuple[int, ...] = tuple(int(x) for x in original_lengths)
        if len(self.original_lengths) != self.N:
            raise InputError("bad_library", "original_lengths 數量與檔案數不符")
        self.seed = seed
        self.source_paths = list(source_paths)

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def K(self) -> int:
        return self.data.shape[1]

    @property
    def F(self) -> int:
        return self.K

    @property
    def B(self) -> int:
        return self.data.shape[2]

    @classmethod
    def random(cls, N: int, K: int, B: int, seed: int) -> "PacketLibrary":
        """以 PCG64 產生可重現的隨機檔案庫"""
        rng = np.random.default_rng(seed)
        data = rng.integers(0, 256, size=(N, K, B), dtype=np.uint8)
        return cls(data, [K * B] * N, seed=seed)

    @classmethod
    def zeros(cls, N: int, K: int, B: int) -> "PacketLibrary":
        return cls(np.zeros((N, K, B), dtype=np.uint8), [K * B] * N)

    @classmethod
    def from_files(cls, blobs: Sequence[bytes], K: int, B: int,
                   names: Sequence[str] = ()) -> "PacketLibrary":
        """補零到 K·B 位元組後切成封包"""
        if not blobs:
            raise InputError("empty_library", "檔案庫至少需要一個檔案")
        budget = K * B
        data = np.zeros((len(blobs), budget), dtype=np.uint8)
        for index, blob in enumerate(blobs):
            if len(blob) > budget:
                name = names[index] if index < len(names) else f"#{index}"
                raise InputError(
                    "file_too_large",
                    f"檔案 {name} 有 {len(blob)} 位元組，超過 K·B = {budget}",
                    file=name, size=len(blob), budget=budget
                )
            data[index, :len(blob)] = np.frombuffer(blob, dtype=np.uint8)
        return cls(data.reshape(len(blobs), K, B), [len(b) for b in blobs], source_paths=names)

    def packet(self, index: int, file: int) -> np.ndarray:
        return self.data[file, index]

    def reassemble(self, file: int) -> bytes:
        return self.data[file].tobytes()[:self.original_lengths[file]]

    def xor(self, other: "PacketLibrary") -> "PacketLibrary":
        if self.data.shape != other.data.shape:
            raise InputError("dimension_mismatch", f"檔案庫維度不同: {self.data.shape} vs {other.data.shape}")
        return PacketLibrary(np.bitwise_xor(self.data, other.data), self.original_lengths)

    def manifest(self) -> LibraryManifest:
        return LibraryManifest(
            N=self.N, K=self.K, B=self.B, seed=self.seed,
            source_paths=self.source_paths,
            original_lengths=list(self.original_lengths),
        )


class DeliveryBatch:
    """t 個 XOR 負載（負載 q 對應匹配 M_q）與自我描述的標頭"""

    def __init__(self, header: BatchHeader, payloads: np.ndarray):
        if payloads.ndim != 2 or payloads.shape[1] != header.B:
            raise InputError("bad_batch", f"負載陣列維度 {payloads.shape} 與 B={header.B} 不符")
        self.header = header
        self.payloads = payloads

    @property
    def t(self) -> int:
        return self.payloads.shape[0]

    @property
    def demands(self) -> DemandVector:
        return DemandVector(self.header.demands)

    def payload(self, q: int) -> bytes:
        return self.payloads[q].tobytes()

    def total_bytes(self) -> int:
        return int(self.payloads.size)


class UserCache:
    """使用者 k 在放置階段存下的封包：index -> (N, B) 陣列"""

    def __init__(self, user: int, store: Dict[int, np.ndarray], file_lengths: Sequence[int]):
        self.user = user
        self.store = store
        self.file_lengths = tuple(file_lengths)

    @property
    def shape(self) -> Tuple[int, int]:
        """(N, B)；自身封包必在快取中"""
        return self.store[self.user].shape

    def packet(self, index: int, file: int) -> np.ndarray:
        try:
            return self.store[index][file]
        except KeyError:
            raise DecodeError(
                "packet_missing",
                f"使用者 {self.user} 的快取缺少封包 ({index}, {file})",
                user=self.user, index=index, file=file
            )

    def cached_bytes(self) -> int:
        return sum(int(block.size) for block in self.store.values())


def build_placement(g: Graph) -> PlacementMap:
    """使用者 j 快取 {j} ∪ {i : {i, j} 不是邊}"""
    placement = PlacementMap(g.vertex_count, [g.non_neighbors(j) for j in range(g.vertex_count)])
    logger.info(f"放置完成: K={g.vertex_count}, 每檔快取封包數={placement.per_file_count}")
    return placement


def check_memory(pm: PlacementMap, N: int, mn_ratio: Fraction) -> bool:
    """所有使用者 (K − d_j)·N ≤ (M/N)·K·N"""
    mn_ratio = Fraction(mn_ratio)
    if not 0 <= mn_ratio <= 1:
        raise InputError("bad_cache_ratio", f"M/N 必須在 [0, 1]: {mn_ratio}")
    capacity = mn_ratio * pm.K * N
    return all(count * N <= capacity for count in pm.per_file_count)


def build_user_cache(k: int, pm: PlacementMap, lib: PacketLibrary) -> UserCache:
    store = {index: lib.data[:, index, :].copy() for index in sorted(pm.cached_packets[k])}
    return UserCache(k, store, lib.original_lengths)


def _check_dimensions(p: RsPartition, d: DemandVector, lib: PacketLibrary):
    d.validate(lib.K, lib.N)
    for index, matching in enumerate(p.matchings):
        for u, v in matching:
            if v >= lib.K:
                raise InputError(
                    "dimension_mismatch",
                    f"匹配 {index} 的頂點 {v} 超出檔案庫封包數 K={lib.K}",
                    matching_index=index
                )


def encode_delivery(p: RsPartition, d: DemandVector, lib: PacketLibrary,
                    workers: Optional[int] = None) -> DeliveryBatch:
    """負載 q = ⊕_{(a,b) ∈ M_q} packet(a, d_b) ⊕ packet(b, d_a)"""
    d = d if isinstance(d, DemandVector) else DemandVector(d)
    _check_dimensions(p, d, lib)
    workers = workers or settings.WORKERS
    demands = np.asarray(d.d, dtype=np.int64)

    def encode_one(matching) -> np.ndarray:
        edges = np.asarray(matching.edges, dtype=np.int64).reshape(-1, 2)
        a, b = edges[:, 0], edges[:, 1]
        terms = np.concatenate([lib.data[demands[b], a], lib.data[demands[a], b]])
        return np.bitwise_xor.reduce(terms, axis=0)

    if workers > 1 and p.t > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(encode_one, p.matchings))
    else:
        rows = [encode_one(m) for m in p.matchings]
    payloads = np.stack(rows) if rows else np.zeros((0, lib.B), dtype=np.uint8)
    header = BatchHeader(partition_id=p.partition_id, K=lib.K, N=lib.N, B=lib.B, demands=list(d.d))
    return DeliveryBatch(header, payloads)


def reference_encode(p: RsPartition, d: Sequence[int], lib: PacketLibrary) -> List[bytes]:
    """逐位元組的樸素實作，作為 encode_delivery 的對照"""
    payloads = []
    for matching in p.matchings:
        acc = bytearray(lib.B)
        for a, b in matching:
            for packet in (lib.packet(a, d[b]).tobytes(), lib.packet(b, d[a]).tobytes()):
                for i, byte in enumerate(packet):
                    acc[i] ^= byte
        payloads.append(bytes(acc))
    return payloads


def check_batch(k: int, batch: DeliveryBatch, pm: PlacementMap, cache: UserCache, p: RsPartition):
    """批次標頭必須與使用者 k 手上的分割、放置及快取一致"""
    header = batch.header
    if header.partition_id != p.partition_id:
        raise DecodeError(
            "partition_mismatch",
            f"使用者 {k}：批次分割 {header.partition_id} 與本地分割 {p.partition_id} 不同",
            k=k, q=None, expected=p.partition_id, actual=header.partition_id
        )
    if batch.t != p.t:
        raise DecodeError(
            "payload_count",
            f"使用者 {k}：批次有 {batch.t} 個負載，分割需要 t={p.t}",
            k=k, q=min(batch.t, p.t)
        )
    if header.K != pm.K or (header.N, header.B) != cache.shape:
        raise DecodeError(
            "dimension_mismatch",
            f"使用者 {k}：批次維度 (K={header.K}, N={header.N}, B={header.B}) 與本地 "
            f"(K={pm.K}, N={cache.shape[0]}, B={cache.shape[1]}) 不符",
            k=k, q=None
        )
    try:
        batch.demands.validate(header.K, header.N)
    except InputError as e:
        raise DecodeError("bad_demands", f"使用者 {k}：{e.detail}", k=k, q=None, demands=header.demands)


def decode_user_packets(k: int, batch: DeliveryBatch, pm: PlacementMap, cache: UserCache,
                        p: RsPartition, g: Graph) -> Tuple[np.ndarray, int]:
    """還原使用者 k 所需檔案的 K 個封包，並回傳使用的負載數"""
    check_batch(k, batch, pm, cache, p)
    d = batch.demands
    want = d[k]
    K = pm.K
    packets = np.empty((K, batch.header.B), dtype=np.uint8)
    consumed = 0
    for f in range(K):
        if f in pm.cached_packets[k]:
            packets[f] = cache.packet(f, want)
            continue
        q = p.matching_of(f, k)
        if q is None or not g.has_edge(f, k):
            raise DecodeError(
                "edge_not_covered", f"邊 {f}-{k} 不屬於任何匹配", f=f, k=k, q=q
            )
        acc = batch.payloads[q].copy()
        for a, b in p.matchings[q]:
            for index, file in ((a, d[b]), (b, d[a])):
                if index == f and file == want and {a, b} == {f, k}:
                    continue
                if index not in pm.cached_packets[k]:
                    raise DecodeError(
                        "packet_missing",
                        f"使用者 {k} 解碼封包 {f} 時，匹配 {q} 的組成封包 ({index}, {file}) 不在快取中",
                        f=f, k=k, q=q
                    )
                np.bitwise_xor(acc, cache.packet(index, file), out=acc)
        packets[f] = acc
        consumed += 1
    return packets, consumed


def decode_user(k: int, batch: DeliveryBatch, pm: PlacementMap, cache: UserCache,
                p: RsPartition, g: Graph) -> bytes:
    """使用者 k 重組其需求檔案（去除補零）"""
    packets, _ = decode_user_packets(k, batch, pm, cache, p, g)
    want = batch.demands[k]
    return packets.tobytes()[:cache.file_lengths[want]]


def scheme_params(g: Graph, p: RsPartition) -> SchemeParams:
    """R = t/K, F = K, 以及最小可行 M/N"""
    params = verify_rs_partition(g, p)
    K = g.vertex_count
    rate = Fraction(params.t, K)
    mn = required_cache_ratio(g)
    return SchemeParams(
        K=K,
        F=K,
        t=params.t,
        rate=fraction_str(rate),
        rate_value=float(rate),
        mn_required=fraction_str(mn),
        mn_required_value=float(mn),
    )
