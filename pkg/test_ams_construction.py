"""[C]^n 距離門檻圖與漸近公式"""

import itertools
import math
from fractions import Fraction

import networkx as nx
import pytest

from config import settings
from errors import InputError, SizeError
from services.ams_service import (
    C1,
    C2,
    AmsParams,
    ams_exponents,
    ams_graph,
    ams_min_degree_bound,
    ams_report,
    mu_brute_force,
    mu_expected_sq_distance,
    plan_parameters,
    vertex_coordinates,
)
from services.graph_service import complete_graph


@pytest.mark.parametrize("C, n, expected", [
    (1, 5, Fraction(0)),
    (2, 4, Fraction(2)),
    (3, 6, Fraction(8)),
])
def test_mu_examples(C, n, expected):
    assert mu_expected_sq_distance(C, n) == expected


@pytest.mark.parametrize("C", range(1, 9))
@pytest.mark.parametrize("n", [1, 2, 5])
def test_mu_closed_form_matches_brute_force(C, n):
    assert mu_expected_sq_distance(C, n) == mu_brute_force(C, n)


def test_coordinates_are_most_significant_first():
    coords = vertex_coordinates(AmsParams(3, 6))
    assert coords[0].tolist() == [0, 0, 0, 0, 0, 0]
    assert coords[1].tolist() == [0, 0, 0, 0, 0, 1]
    assert coords[3].tolist() == [0, 0, 0, 0, 1, 0]
    assert coords[728].tolist() == [2, 2, 2, 2, 2, 2]


def test_c2_n4_is_complete_k16(k16):
    assert k16 == complete_graph(16)
    assert set(k16.edges) == {tuple(sorted(e)) for e in nx.complete_graph(16).edges}


def test_small_relaxed_instance_matches_pairwise_rule():
    params = AmsParams(3, 2, relax=True)
    g = ams_graph(params)
    coords = vertex_coordinates(params)
    mu = mu_expected_sq_distance(3, 2)
    for u, v in itertools.combinations(range(params.K), 2):
        distance = sum((int(a) - int(b)) ** 2 for a, b in zip(coords[u], coords[v]))
        assert g.has_edge(u, v) == (abs(distance - mu) < params.n)


def test_c3_n6_graph():
    params = AmsParams(3, 6)
    g = ams_graph(params)
    assert g.vertex_count == 729
    assert not g.has_edge(0, 1)
    coords = vertex_coordinates(params)
    for v in (1, 2, 4, 13, 40, 364, 728):
        distance = int(((coords[v] - coords[0]) ** 2).sum())
        assert g.has_edge(0, v) == (3 <= distance <= 13)
    for v in range(729):
        assert v not in g.neighbors(v)
        for w in g.neighbors(v):
            assert v in g.neighbors(w)
    report = ams_report(g, params)
    assert report.min_degree_bound < 0
    assert report.min_degree_bound_holds
    assert report.missing_edges == 729 * 728 // 2 - g.edge_count


def test_parallel_build_matches_serial():
    params = AmsParams(3, 6)
    assert ams_graph(params, workers=4) == ams_graph(params, workers=1)


def test_relaxed_single_vertex():
    params = AmsParams(1, 2, relax=True)
    assert params.relaxed
    g = ams_graph(params)
    assert g.vertex_count == 1 and g.edge_count == 0
    report = ams_report(g, params)
    assert report.relaxed
    assert report.f is None
    assert report.min_degree_bound_holds


@pytest.mark.parametrize("C, n", [(1, 2), (3, 5), (3, 4), (2, 2)])
def test_params_rejected_without_relax(C, n):
    with pytest.raises(InputError) as exc:
        AmsParams(C, n)
    assert exc.value.code == "bad_ams_params"


def test_valid_params_are_not_marked_relaxed():
    assert not AmsParams(2, 4, relax=True).relaxed
    assert AmsParams(3, 3, relax=True).relaxed


def test_relax_feature_flag(monkeypatch):
    monkeypatch.setattr(settings, "ENABLE_RELAX", False)
    with pytest.raises(InputError) as exc:
        AmsParams(3, 3, relax=True)
    assert exc.value.code == "relax_disabled"


def test_vertex_budget():
    with pytest.raises(SizeError) as exc:
        ams_graph(AmsParams(3, 6), vertex_budget=100)
    assert exc.value.code == "vertex_budget_exceeded"


def test_min_degree_bound_k16():
    params = AmsParams(2, 4)
    assert ams_min_degree_bound(params) == pytest.approx(-12.24, abs=0.01)
    report = ams_report(ams_graph(params), params)
    assert report.min_degree == 15
    assert report.min_degree_bound_holds
    assert report.non_neighbor_bound_vacuous
    assert report.degree_histogram == {15: 16}
    assert report.mu == "2"


def test_exponents_c3():
    result = ams_exponents(3)
    assert result.f == pytest.approx(5.2807, abs=1e-3)
    assert result.g == pytest.approx(1.99438, abs=1e-3)
    assert result.label == "asymptotic"
    assert ams_exponents(111).f == pytest.approx(1.9986, abs=1e-3)


def test_exponents_monotone_in_c():
    results = [ams_exponents(C) for C in range(2, 101)]
    for smaller, larger in zip(results, results[1:]):
        assert larger.f < smaller.f
        assert larger.g > smaller.g


def test_exponents_reject_small_alphabet():
    with pytest.raises(InputError):
        ams_exponents(1)


def test_plan_limit_delta_one():
    result = plan_parameters(1.0)
    assert result.C == 111
    assert result.n_min == 222
    assert result.ln_K == pytest.approx(1045.5, abs=0.1)
    assert result.epsilon == pytest.approx(6.99e-10, rel=1e-2)
    assert result.ln_epsilon == pytest.approx(math.log(result.epsilon))
    assert result.mn_lower_bound_ln == pytest.approx(math.log(2.0), abs=1e-6)


@pytest.mark.parametrize("delta", [0.3, 0.5])
def test_derived_constants_reproduce_epsilon(delta):
    result = plan_parameters(delta)
    assert result.epsilon_formula == pytest.approx(result.epsilon, rel=0.1)
    assert result.c1 == pytest.approx(1.0 / (4.0 * math.log(10.5)))
    assert result.c2 == pytest.approx(8.0 * math.log(10.5))
    assert C1 * delta * math.exp(-C2 / delta) == pytest.approx(result.epsilon, rel=0.1)


def test_plan_delta_half():
    result = plan_parameters(0.5)
    assert result.C == 12156
    assert result.rate_exponent <= 0.5


@pytest.mark.parametrize("delta, code", [
    (0.0, "bad_delta"),
    (1.5, "bad_delta"),
    (-0.2, "bad_delta"),
    (0.001, "delta_too_small"),
])
def test_plan_rejects(delta, code):
    with pytest.raises(InputError) as exc:
        plan_parameters(delta)
    assert exc.value.code == code
