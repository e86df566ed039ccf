from fractions import Fraction
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator


def fraction_str(value: Fraction) -> str:
    """精確有理數的文字表示，整數時不帶分母"""
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


class RsParams(BaseModel):
    """分割驗證結果"""
    r_avg: str
    r_avg_value: float
    t: int
    min_size: int
    max_size: int
    edge_count: int
    is_uniform: bool

    @classmethod
    def from_exact(cls, r_avg: Fraction, t: int, min_size: int, max_size: int, edge_count: int) -> "RsParams":
        return cls(
            r_avg=fraction_str(r_avg),
            r_avg_value=float(r_avg),
            t=t,
            min_size=min_size,
            max_size=max_size,
            edge_count=edge_count,
            is_uniform=min_size == max_size,
        )

    @property
    def r_exact(self) -> Fraction:
        return Fraction(self.r_avg)


class SchemeParams(BaseModel):
    """(R = t/K, K, M, N, F = K) 快取方案參數"""
    K: int
    F: int
    t: int
    rate: str
    rate_value: float
    mn_required: str
    mn_required_value: float

    @property
    def rate_exact(self) -> Fraction:
        return Fraction(self.rate)


class ExponentsResult(BaseModel):
    C: int
    f: float
    g: float
    label: str = "asymptotic"


class PlannerResult(BaseModel):
    delta: float
    C: int
    n_min: int
    ln_K: float
    epsilon: float
    ln_epsilon: float
    mn_lower_bound_ln: float
    c1: float
    c2: float
    epsilon_formula: float
    epsilon_relative_gap: float
    rate_exponent: float
    label: str = "asymptotic"


class AmsReport(BaseModel):
    """AMS 圖的量測值與漸近公式並列"""
    C: int
    n: int
    K: int
    relaxed: bool
    mu: str
    edge_count: int
    missing_edges: int
    min_degree: int
    max_degree: int
    degree_histogram: Dict[int, int]
    min_degree_bound: float
    min_degree_bound_holds: bool
    non_neighbor_bound: float
    max_non_neighbors: int
    non_neighbor_bound_vacuous: bool
    non_neighbor_bound_holds: bool
    f: Optional[float] = None
    g: Optional[float] = None
    ln_t_asymptotic: Optional[float] = None
    ln_missing_asymptotic: Optional[float] = None
    cache_threshold: Optional[float] = None
    digest: str


class LibraryManifest(BaseModel):
    N: int
    K: int
    B: int
    seed: Optional[int] = None
    source_paths: List[str] = Field(default_factory=list)
    original_lengths: List[int]


class BatchHeader(BaseModel):
    partition_id: str
    K: int = Field(gt=0)
    N: int = Field(gt=0)
    B: int = Field(gt=0)
    demands: List[int]


GraphSource = Literal["file", "ams", "random", "fixture"]
PartitionMode = Literal["greedy", "exact", "file"]
DemandMode = Literal["exhaustive", "random", "explicit", "presets", "mixed"]
LibrarySource = Literal["seeded", "directory"]


class SimConfig(BaseModel):
    """模擬設定"""
    graph_source: GraphSource = "fixture"
    graph_path: Optional[str] = None
    fixture: Optional[str] = "c6"
    ams_c: Optional[int] = None
    ams_n: Optional[int] = None
    relax: bool = False
    random_k: Optional[int] = None
    edge_prob: Optional[float] = None
    partition_mode: PartitionMode = "greedy"
    partition_path: Optional[str] = None
    N: int = Field(default=2, ge=1)
    B: int = Field(default=64, ge=1)
    demand_mode: DemandMode = "exhaustive"
    demand_count: int = Field(default=1000, ge=0)
    demands: List[List[int]] = Field(default_factory=list)
    library_source: LibrarySource = "seeded"
    library_dir: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    exhaustive_limit: int = 100000
    workers: int = Field(default=1, ge=1)
    batch_out: Optional[str] = None

    @model_validator(mode="after")
    def check_sources(self) -> "SimConfig":
        if self.graph_source == "file" and not self.graph_path:
            raise ValueError("graph_source=file 需要 graph_path")
        if self.graph_source == "fixture" and not self.fixture:
            raise ValueError("graph_source=fixture 需要 fixture 名稱")
        if self.graph_source == "ams" and (self.ams_c is None or self.ams_n is None):
            raise ValueError("graph_source=ams 需要 ams_c 與 ams_n")
        if self.graph_source == "random" and (self.random_k is None or self.edge_prob is None):
            raise ValueError("graph_source=random 需要 random_k 與 edge_prob")
        if self.partition_mode == "file" and not self.partition_path:
            raise ValueError("partition_mode=file 需要 partition_path")
        if self.library_source == "directory" and not self.library_dir:
            raise ValueError("library_source=directory 需要 library_dir")
        if self.demand_mode == "explicit" and not self.demands:
            raise ValueError("demand_mode=explicit 需要至少一個需求向量")
        return self


class SimReport(BaseModel):
    """模擬報告；timestamp、wall_times 與 batch_path 不列入摘要"""
    K: int
    F: int
    N: int
    B: int
    t: int
    r_avg: str
    r_min: int
    r_max: int
    rate_R: str
    rate_R_value: float
    mn_required: str
    mn_required_value: float
    cache_packets_per_user: List[int]
    cached_bytes_per_user: List[int]
    payload_bytes_total: int
    uncoded_baseline_rate: str
    uncoded_baseline_rate_value: float
    naive_rate: int
    demand_count: int
    decode_ok: bool
    user_decodes: int
    payloads_consumed_max: int
    relaxed: bool = False
    seeds: Dict[str, int]
    graph_digest: str
    partition_digest: str
    wall_times: Dict[str, float] = Field(default_factory=dict)
    timestamp: Optional[str] = None
    report_digest: Optional[str] = None
    batch_path: Optional[str] = None


class BaselineRow(BaseModel):
    scheme: str
    rate: str
    rate_value: float
    total_bytes: int
