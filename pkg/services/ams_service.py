"""
[C]^n 上的距離門檻圖，以及其漸近參數公式

頂點編號為座標 tuple 的混合基數編碼（最高位座標在前），字母表為 {0, ..., C-1}。
邊的判定完全使用整數：|6·‖u−v‖² − n(C²−1)| < 6n。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from config import settings
from errors import InputError, SizeError
from models import AmsReport, ExponentsResult, PlannerResult, fraction_str
from services.graph_service import Graph, GraphBuilder, degree_histogram

logger = logging.getLogger(__name__)

LN_10_5 = math.log(10.5)
# 將 δ = 2 ln 10.5 / ln C 代入 1/(2C⁴ ln C) 推導而得
C1 = 1.0 / (4.0 * LN_10_5)
C2 = 8.0 * LN_10_5


class AmsParams:
    """字母表大小 C、維度 n、頂點數 K = C^n"""

    def __init__(self, C: int, n: int, relax: bool = False):
        if relax and not settings.ENABLE_RELAX:
            raise InputError("relax_disabled", "RS_ENABLE_RELAX=false，不允許放寬參數限制")
        if relax:
            if C < 1 or n < 1:
                raise InputError("bad_ams_params", f"放寬模式仍需 C ≥ 1、n ≥ 1: C={C}, n={n}")
        else:
            if C < 2:
                raise InputError("bad_ams_params", f"C 必須 ≥ 2: C={C}（可用 --relax 放寬）")
            if n % 2 != 0 or n < 2 * C:
                raise InputError(
                    "bad_ams_params",
                    f"n 必須為偶數且 n ≥ 2C: C={C}, n={n}（可用 --relax 放寬）"
                )
        self.C = C
        self.n = n
        self.K = C ** n
        self.mu_times_6 = n * (C * C - 1)
        self.relaxed = relax and not (C >= 2 and n % 2 == 0 and n >= 2 * C)
        if self.relaxed:
            logger.warning(f"AMS 參數已放寬: C={C}, n={n}，定理前提不成立")

    @property
    def mu(self) -> Fraction:
        return Fraction(self.mu_times_6, 6)

    def __repr__(self):
        return f"<AmsParams(C={self.C}, n={self.n}, K={self.K}, relaxed={self.relaxed})>"


def mu_expected_sq_distance(C: int, n: int) -> Fraction:
    """μ = E‖x−y‖² = n(C²−1)/6"""
    if C < 1 or n < 1:
        raise InputError("bad_ams_params", f"C 與 n 必須 ≥ 1: C={C}, n={n}")
    return Fraction(n * (C * C - 1), 6)


def mu_brute_force(C: int, n: int) -> Fraction:
    """逐對座標平均 (x−y)² 的精確值，用來核對封閉公式"""
    total = sum((x - y) ** 2 for x in range(C) for y in range(C))
    return Fraction(total, C * C) * n


def vertex_coordinates(params: AmsParams) -> np.ndarray:
    """K × n 座標矩陣，列索引即頂點編號"""
    indices = np.arange(params.K, dtype=np.int64)
    coords = np.empty((params.K, params.n), dtype=np.int64)
    for position in range(params.n - 1, -1, -1):
        coords[:, position] = indices % params.C
        indices = indices // params.C
    return coords


def ams_graph(params: AmsParams, vertex_budget: Optional[int] = None,
              workers: Optional[int] = None) -> Graph:
    """依整數距離門檻建立圖；輸出與雙重迴圈逐對判定完全相同"""
    vertex_budget = settings.VERTEX_BUDGET if vertex_budget is None else vertex_budget
    workers = workers or settings.WORKERS
    if params.K > vertex_budget:
        raise SizeError(
            "vertex_budget_exceeded",
            f"K = {params.C}^{params.n} = {params.K} 超過頂點預算 {vertex_budget}",
            K=params.K, budget=vertex_budget
        )

    coords = vertex_coordinates(params)
    low = params.mu_times_6 - 6 * params.n
    high = params.mu_times_6 + 6 * params.n

    def row_edges(u: int) -> Tuple[int, np.ndarray]:
        diffs = coords[u + 1:] - coords[u]
        scaled = 6 * np.einsum("ij,ij->i", diffs, diffs)
        hits = np.flatnonzero((scaled > low) & (scaled < high))
        return u, hits + (u + 1)

    builder = GraphBuilder(params.K)
    rows = range(params.K)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(row_edges, rows))
    else:
        results = [row_edges(u) for u in rows]
    # 依列順序合併，結果與執行緒排程無關
    for u, vs in results:
        builder.add_edges_unchecked(np.full(vs.shape, u, dtype=np.int64), vs)

    graph = builder.freeze()
    logger.info(f"AMS 圖建立完成: C={params.C}, n={params.n}, K={params.K}, |E|={graph.edge_count}")
    return graph


def ams_epsilon(C: int) -> float:
    """1 / (2 C⁴ ln C)"""
    if C < 2:
        raise InputError("bad_ams_params", f"C 必須 ≥ 2: C={C}")
    return 1.0 / (2.0 * C ** 4 * math.log(C))


def ams_min_degree_bound(params: AmsParams) -> float:
    """最小度數下界 K(1 − 2K^{−1/(2C⁴ ln C)})；小規模時可能為負"""
    eps = ams_epsilon(params.C)
    return params.K * (1.0 - 2.0 * params.K ** (-eps))


def ams_non_neighbor_bound(params: AmsParams) -> float:
    """每個頂點非鄰居數上界 2K^{1−1/(2C⁴ ln C)}"""
    eps = ams_epsilon(params.C)
    return 2.0 * params.K ** (1.0 - eps)


def ams_exponents(C: int) -> ExponentsResult:
    """漸近指數（忽略 o(1) 項）"""
    if C < 2:
        raise InputError("bad_ams_params", f"C 必須 ≥ 2: C={C}")
    ln_c = math.log(C)
    return ExponentsResult(
        C=C,
        f=1.0 + 2.0 * LN_10_5 / ln_c,
        g=2.0 - 1.0 / (2.0 * C ** 4 * ln_c),
    )


def plan_parameters(delta: float) -> PlannerResult:
    """給定傳輸率指數 δ，求出 C、n 與快取比例下界（以 ln K 表示）"""
    if not 0.0 < delta <= 1.0:
        raise InputError("bad_delta", f"delta 必須在 (0, 1]: {delta}")
    # delta = 1.0 視為 δ→1⁻ 的極限
    try:
        C = math.ceil(10.5 ** (2.0 / delta))
    except OverflowError:
        raise InputError("delta_too_small", f"delta={delta} 太小，C 超出浮點範圍")
    n_min = 2 * C
    ln_c = math.log(C)
    ln_k = n_min * ln_c
    ln_epsilon = -math.log(2.0) - 4.0 * ln_c - math.log(ln_c)
    epsilon = math.exp(ln_epsilon)
    epsilon_formula = C1 * delta * math.exp(-C2 / delta)
    gap = abs(epsilon - epsilon_formula) / epsilon_formula if epsilon_formula > 0 else 0.0
    result = PlannerResult(
        delta=delta,
        C=C,
        n_min=n_min,
        ln_K=ln_k,
        epsilon=epsilon,
        ln_epsilon=ln_epsilon,
        mn_lower_bound_ln=math.log(2.0) - epsilon * ln_k,
        c1=C1,
        c2=C2,
        epsilon_formula=epsilon_formula,
        epsilon_relative_gap=gap,
        rate_exponent=2.0 * LN_10_5 / ln_c,
    )
    logger.info(f"參數規劃: delta={delta}, C={C}, n_min={n_min}, ln K={ln_k:.1f}")
    return result


def ams_report(graph: Graph, params: AmsParams) -> AmsReport:
    """量測值（度數、缺邊數）與漸近公式並列，不對 o(1) 公式做斷言"""
    K = params.K
    degrees = graph.degrees()
    min_degree = min(degrees)
    max_non_neighbors = K - min_degree
    if params.C >= 2:
        bound = ams_min_degree_bound(params)
        non_bound = ams_non_neighbor_bound(params)
        exponents = ams_exponents(params.C)
        ln_k = params.n * math.log(params.C)
        f, g = exponents.f, exponents.g
        ln_t, ln_missing = f * ln_k, g * ln_k
        cache_threshold = 2.0 * K ** (-ams_epsilon(params.C))
    else:
        bound, non_bound = float("-inf"), float("inf")
        f = g = ln_t = ln_missing = cache_threshold = None
    vacuous = non_bound > K
    if bound <= 0:
        logger.warning(f"最小度數下界 {bound:.3f} ≤ 0，此規模下斷言為空泛成立")
    return AmsReport(
        C=params.C,
        n=params.n,
        K=K,
        relaxed=params.relaxed,
        mu=fraction_str(params.mu),
        edge_count=graph.edge_count,
        missing_edges=K * (K - 1) // 2 - graph.edge_count,
        min_degree=min_degree,
        max_degree=max(degrees),
        degree_histogram=degree_histogram(graph),
        min_degree_bound=bound if math.isfinite(bound) else -1.0,
        min_degree_bound_holds=min_degree >= max(0.0, bound),
        non_neighbor_bound=non_bound if math.isfinite(non_bound) else float(K),
        max_non_neighbors=max_non_neighbors,
        non_neighbor_bound_vacuous=vacuous,
        non_neighbor_bound_holds=vacuous or max_non_neighbors <= non_bound,
        f=f,
        g=g,
        ln_t_asymptotic=ln_t,
        ln_missing_asymptotic=ln_missing,
        cache_threshold=cache_threshold,
        digest=graph.digest(),
    )
