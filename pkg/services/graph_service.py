"""
無向簡單圖與誘導匹配判定
頂點一律從 0 開始編號；邊以 (min, max) 正規化儲存，底層為凍結的 networkx 圖
"""

import hashlib
import logging
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

import networkx as nx
import numpy as np

from errors import InputError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Graph:
    """凍結後的無向簡單圖，可安全地被多個 worker 同時讀取"""

    __slots__ = ("_k", "_edges", "_nx", "_adj")

    def __init__(self, vertex_count: int, edges: Iterable[Edge] = ()):
        if vertex_count < 1:
            raise InputError("bad_vertex_count", f"頂點數必須為正整數: {vertex_count}")
        builder = GraphBuilder(vertex_count)
        for u, v in edges:
            builder.add_edge(u, v)
        self._adopt(builder)

    @classmethod
    def _from_builder(cls, builder: "GraphBuilder") -> "Graph":
        graph = cls.__new__(cls)
        graph._adopt(builder)
        return graph

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "Graph":
        """節點必須恰為 0..K-1；邊照常檢查（自迴圈會被拒絕）"""
        k = graph.number_of_nodes()
        if set(graph.nodes) != set(range(k)):
            raise InputError("bad_vertex_labels", "networkx 圖的節點必須為 0..K-1")
        return cls(k, graph.edges())

    def _adopt(self, builder: "GraphBuilder"):
        graph = nx.Graph()
        graph.add_nodes_from(range(builder.vertex_count))
        graph.add_edges_from(builder._edges)
        self._k = builder.vertex_count
        self._edges = tuple(sorted(builder._edges))
        self._nx = nx.freeze(graph)
        self._adj = tuple(frozenset(graph.adj[v]) for v in range(builder.vertex_count))

    @property
    def nx(self) -> nx.Graph:
        """唯讀的 networkx 圖"""
        return self._nx

    @property
    def vertex_count(self) -> int:
        return self._k

    @property
    def edges(self) -> Tuple[Edge, ...]:
        """依字典序排列的正規化邊"""
        return self._edges

    @property
    def edge_count(self) -> int:
        return self._nx.number_of_edges()

    def has_edge(self, u: int, v: int) -> bool:
        return self._nx.has_edge(u, v)

    def neighbors(self, v: int) -> FrozenSet[int]:
        self._check_vertex(v)
        return self._adj[v]

    def non_neighbors(self, v: int) -> FrozenSet[int]:
        """不相鄰的頂點，包含 v 自身（自迴圈視為非邊）"""
        self._check_vertex(v)
        return frozenset(nx.non_neighbors(self._nx, v)) | {v}

    def degrees(self) -> List[int]:
        return [d for _, d in sorted(self._nx.degree)]

    def min_degree(self) -> int:
        return min(self.degrees())

    def max_degree(self) -> int:
        return max(self.degrees())

    def canonical_text(self) -> str:
        lines = [f"K {self._k}"]
        lines.extend(f"{u} {v}" for u, v in self._edges)
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("ascii")).hexdigest()

    def _check_vertex(self, v: int):
        if not 0 <= v < self._k:
            raise InputError("vertex_out_of_range", f"頂點 {v} 超出範圍 [0, {self._k})", vertex=v)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._k == other._k and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._k, self._edges))

    def __setattr__(self, name, value):
        if hasattr(self, "_adj"):
            raise AttributeError("Graph 建立後不可修改")
        object.__setattr__(self, name, value)

    def __repr__(self):
        return f"<Graph(K={self._k}, edges={len(self._edges)})>"


class GraphBuilder:
    """累積邊，最後 freeze() 成不可變的 Graph"""

    def __init__(self, vertex_count: int):
        if vertex_count < 1:
            raise InputError("bad_vertex_count", f"頂點數必須為正整數: {vertex_count}")
        self.vertex_count = vertex_count
        self._edges = set()

    def add_edge(self, u: int, v: int, line: Optional[int] = None) -> "GraphBuilder":
        where = f"（第 {line} 行）" if line is not None else ""
        for x in (u, v):
            if not 0 <= x < self.vertex_count:
                raise InputError(
                    "vertex_out_of_range",
                    f"頂點 {x} 超出範圍 [0, {self.vertex_count}){where}",
                    vertex=x, line=line
                )
        if u == v:
            raise InputError("self_loop", f"不允許自迴圈 {u}-{v}{where}", edge=(u, v), line=line)
        edge = canonical_edge(u, v)
        if edge in self._edges:
            raise InputError("duplicate_edge", f"重複的邊 {edge[0]}-{edge[1]}{where}", edge=edge, line=line)
        self._edges.add(edge)
        return self

    def add_edges_unchecked(self, us: np.ndarray, vs: np.ndarray) -> "GraphBuilder":
        """大量加入已知合法且 u < v、彼此不重複的邊（產生器使用）"""
        self._edges.update(zip(us.tolist(), vs.tolist()))
        return self

    def freeze(self) -> Graph:
        return Graph._from_builder(self)


class Matching:
    """邊的有序列表；是否兩兩不相交由 is_matching 判定"""

    __slots__ = ("edges",)

    def __init__(self, edges: Iterable[Edge]):
        self.edges: Tuple[Edge, ...] = tuple(canonical_edge(u, v) for u, v in edges)

    def vertices(self) -> List[int]:
        return [x for edge in self.edges for x in edge]

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.edges)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matching):
            return NotImplemented
        return self.edges == other.edges

    def __hash__(self) -> int:
        return hash(self.edges)

    def __repr__(self):
        return f"<Matching({'; '.join(f'{u} {v}' for u, v in self.edges)})>"


def degree(g: Graph, v: int) -> int:
    """頂點 v 的度數"""
    g._check_vertex(v)
    return g.nx.degree[v]


def _require_edges_in_graph(g: Graph, m: Matching):
    for u, v in m:
        if not g.has_edge(u, v):
            raise InputError("edge_not_in_graph", f"邊 {u}-{v} 不在圖中", edge=(u, v))


def is_matching(g: Graph, m: Matching) -> bool:
    """邊兩兩沒有共同頂點"""
    _require_edges_in_graph(g, m)
    vertices = m.vertices()
    return len(vertices) == len(set(vertices))


def induced_edges(g: Graph, vertices: Iterable[int]) -> List[Edge]:
    """頂點集合誘導子圖的正規化邊（字典序）"""
    return sorted(canonical_edge(u, v) for u, v in g.nx.subgraph(vertices).edges())


def count_induced_edges(g: Graph, vertices: Iterable[int]) -> int:
    """頂點集合誘導子圖中的邊數"""
    return g.nx.subgraph(vertices).number_of_edges()


def is_induced_matching(g: Graph, m: Matching) -> bool:
    """端點集合的誘導子圖恰好只含 m 的邊"""
    if not is_matching(g, m):
        return False
    return count_induced_edges(g, m.vertices()) == len(m)


# 常用的圖

def empty_graph(k: int) -> Graph:
    return Graph.from_networkx(nx.empty_graph(k))


def cycle_graph(k: int) -> Graph:
    # K < 3 時退化為路徑（避免 K=1 的自迴圈）
    return Graph.from_networkx(nx.cycle_graph(k) if k >= 3 else nx.path_graph(k))


def path_graph(k: int) -> Graph:
    return Graph.from_networkx(nx.path_graph(k))


def complete_graph(k: int) -> Graph:
    return Graph.from_networkx(nx.complete_graph(k))


def random_graph(k: int, edge_prob: float, seed: int) -> Graph:
    """G(K, p)：以 PCG64 依字典序對每一對頂點抽樣"""
    if not 0.0 <= edge_prob <= 1.0:
        raise InputError("bad_edge_prob", f"邊機率必須在 [0, 1]: {edge_prob}")
    rng = np.random.default_rng(seed)
    us, vs = np.triu_indices(k, 1)
    keep = rng.random(us.shape[0]) < edge_prob
    graph = GraphBuilder(k).add_edges_unchecked(us[keep], vs[keep]).freeze()
    logger.info(f"隨機圖產生完成: K={k}, p={edge_prob}, seed={seed}, |E|={graph.edge_count}")
    return graph


def degree_histogram(g: Graph) -> Dict[int, int]:
    """度數 -> 頂點數，只列出出現過的度數"""
    return {d: count for d, count in enumerate(nx.degree_histogram(g.nx)) if count}
