"""
誘導匹配分割：產生 (貪婪 / 窮舉最小) 與驗證
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from errors import SizeError, VerificationError
from models import RsParams
from services.graph_service import (
    Edge,
    Graph,
    Matching,
    canonical_edge,
    induced_edges,
)

logger = logging.getLogger(__name__)


class RsPartition:
    """有序的誘導匹配列表 M_0..M_{t-1}"""

    def __init__(self, matchings: Sequence[Matching]):
        self.matchings: Tuple[Matching, ...] = tuple(
            m if isinstance(m, Matching) else Matching(m) for m in matchings
        )
        self._lookup: Optional[Dict[Edge, int]] = None

    @property
    def t(self) -> int:
        return len(self.matchings)

    @property
    def sizes(self) -> List[int]:
        return [len(m) for m in self.matchings]

    @property
    def edge_total(self) -> int:
        return sum(self.sizes)

    @property
    def r_avg(self) -> Fraction:
        # t = 0 (無邊圖) 時定義為 0
        if self.t == 0:
            return Fraction(0)
        return Fraction(self.edge_total, self.t)

    def matching_of(self, u: int, v: int) -> Optional[int]:
        """邊所在的匹配編號；不在任何匹配中時回傳 None"""
        if self._lookup is None:
            lookup = {}
            for index, matching in enumerate(self.matchings):
                for edge in matching:
                    lookup.setdefault(edge, index)
            self._lookup = lookup
        return self._lookup.get(canonical_edge(u, v))

    def canonical_text(self) -> str:
        lines = [
            f"{index}: " + "; ".join(f"{u} {v}" for u, v in matching)
            for index, matching in enumerate(self.matchings)
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("ascii")).hexdigest()

    @property
    def partition_id(self) -> str:
        return self.digest()[:16]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RsPartition):
            return NotImplemented
        return self.matchings == other.matchings

    def __repr__(self):
        return f"<RsPartition(t={self.t}, r_avg={self.r_avg})>"


def _check_matching(g: Graph, index: int, matching: Matching):
    """單一匹配的結構檢查：邊存在、非空、頂點不相交、誘導"""
    if len(matching) == 0:
        raise VerificationError("empty_matching", f"匹配 {index} 為空", matching_index=index)
    seen = {}
    for edge in matching:
        if not g.has_edge(*edge):
            raise VerificationError(
                "edge_not_in_graph", f"匹配 {index} 的邊 {edge[0]}-{edge[1]} 不在圖中",
                matching_index=index, edge=edge
            )
        for x in edge:
            if x in seen:
                raise VerificationError(
                    "not_vertex_disjoint",
                    f"匹配 {index} 的邊 {edge[0]}-{edge[1]} 與 {seen[x][0]}-{seen[x][1]} 共用頂點 {x}",
                    matching_index=index, edge=edge
                )
            seen[x] = edge
    own = set(matching.edges)
    for other in induced_edges(g, seen):
        if other not in own:
            raise VerificationError(
                "not_induced",
                f"匹配 {index} 不是誘導匹配：邊 {other[0]}-{other[1]} 落在其頂點集合內",
                matching_index=index, edge=other
            )


def verify_rs_partition(g: Graph, p: RsPartition, workers: Optional[int] = None) -> RsParams:
    """驗證分割：匹配為誘導匹配、兩兩邊不相交、聯集恰為 E"""
    workers = workers or settings.WORKERS
    if workers > 1 and p.t > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            # list() 讓第一個例外依匹配順序拋出
            list(executor.map(lambda item: _check_matching(g, *item), enumerate(p.matchings)))
    else:
        for index, matching in enumerate(p.matchings):
            _check_matching(g, index, matching)

    owner: Dict[Edge, int] = {}
    for index, matching in enumerate(p.matchings):
        for edge in matching:
            if edge in owner:
                raise VerificationError(
                    "edge_covered_twice",
                    f"邊 {edge[0]}-{edge[1]} 同時出現在匹配 {owner[edge]} 與 {index}",
                    matching_index=index, edge=edge
                )
            owner[edge] = index
    for edge in g.edges:
        if edge not in owner:
            raise VerificationError(
                "edge_uncovered", f"邊 {edge[0]}-{edge[1]} 未被任何匹配涵蓋", edge=edge
            )

    sizes = p.sizes
    r_avg = p.r_avg
    if r_avg * p.t != g.edge_count:
        raise VerificationError("size_mismatch", f"r·t = {r_avg * p.t} 與 |E| = {g.edge_count} 不符")
    return RsParams.from_exact(
        r_avg=r_avg,
        t=p.t,
        min_size=min(sizes) if sizes else 0,
        max_size=max(sizes) if sizes else 0,
        edge_count=g.edge_count,
    )


def greedy_partition(g: Graph) -> RsPartition:
    """依字典序掃描未分配的邊，維持誘導性質地逐一填滿匹配"""
    if g.edge_count == 0:
        return RsPartition([])
    edges = np.asarray(g.edges, dtype=np.int64)
    remaining = np.ones(len(edges), dtype=bool)
    neighbor_lists = [np.fromiter(g.neighbors(x), dtype=np.int64) for x in range(g.vertex_count)]
    matchings = []

    while remaining.any():
        pending = np.flatnonzero(remaining)
        us, vs = edges[pending, 0], edges[pending, 1]
        blocked = np.zeros(g.vertex_count, dtype=bool)
        current = []
        start = 0
        while start < len(pending):
            # 頂點已用過或與目前匹配的頂點相鄰者皆被封鎖
            free = ~blocked[us[start:]] & ~blocked[vs[start:]]
            hits = np.flatnonzero(free)
            if hits.size == 0:
                break
            pick = start + int(hits[0])
            u, v = int(us[pick]), int(vs[pick])
            current.append((u, v))
            remaining[pending[pick]] = False
            blocked[[u, v]] = True
            blocked[neighbor_lists[u]] = True
            blocked[neighbor_lists[v]] = True
            start = pick + 1
        matchings.append(Matching(current))

    partition = RsPartition(matchings)
    logger.info(f"貪婪分割完成: |E|={g.edge_count}, t={partition.t}, r_avg={partition.r_avg}")
    return partition


def partition_lower_bound(g: Graph) -> int:
    """每個匹配最多使用一個頂點一次，故 t ≥ 最大度數"""
    return g.max_degree() if g.edge_count else 0


def exact_min_partition(g: Graph, edge_limit: Optional[int] = None) -> RsPartition:
    """回溯窮舉最小 t 的分割（測試用的基準答案）"""
    edge_limit = settings.EXACT_EDGE_LIMIT if edge_limit is None else edge_limit
    if g.edge_count > edge_limit:
        raise SizeError(
            "instance_too_large",
            f"|E|={g.edge_count} 超過窮舉上限 {edge_limit}",
            edge_count=g.edge_count, edge_limit=edge_limit
        )
    if g.edge_count == 0:
        return RsPartition([])

    edges = list(g.edges)
    upper = greedy_partition(g).t
    for target in range(max(1, partition_lower_bound(g)), upper + 1):
        assignment = _search_partition(g, edges, target)
        if assignment is not None:
            partition = RsPartition([Matching(m) for m in assignment])
            logger.info(f"窮舉分割完成: |E|={g.edge_count}, t={partition.t}")
            return partition
    # 貪婪解本身可行，不會走到這裡
    raise VerificationError("search_exhausted", "窮舉搜尋未找到分割")


def _search_partition(g: Graph, edges: List[Edge], target: int) -> Optional[List[List[Edge]]]:
    groups: List[List[Edge]] = []
    group_vertices: List[set] = []

    def fits(index: int, u: int, v: int) -> bool:
        vertices = group_vertices[index]
        if u in vertices or v in vertices:
            return False
        return not (g.neighbors(u) & vertices) and not (g.neighbors(v) & vertices)

    def place(position: int) -> bool:
        if position == len(edges):
            return True
        u, v = edges[position]
        for index in range(len(groups)):
            if fits(index, u, v):
                groups[index].append((u, v))
                group_vertices[index].update((u, v))
                if place(position + 1):
                    return True
                groups[index].pop()
                group_vertices[index].difference_update((u, v))
        # 只能開啟下一個編號的新匹配（第一條邊必在匹配 0）
        if len(groups) < target:
            groups.append([(u, v)])
            group_vertices.append({u, v})
            if place(position + 1):
                return True
            groups.pop()
            group_vertices.pop()
        return False

    return [list(group) for group in groups] if place(0) else None


def required_cache_ratio(g: Graph) -> Fraction:
    """最小可行的 M/N = max_j (K - d_j) / K"""
    k = g.vertex_count
    return Fraction(k - g.min_degree(), k)

