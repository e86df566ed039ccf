"""共用的 pytest fixtures"""

import os

import pytest

from config import settings
from services.ams_service import AmsParams, ams_graph
from services.graph_service import cycle_graph, empty_graph
from services.partition_service import greedy_partition
from storage import load_graph, load_partition

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


@pytest.fixture(autouse=True)
def shipped_fixture_dir(monkeypatch):
    """測試一律使用專案內的 fixtures/ 與預設設定"""
    monkeypatch.setattr(settings, "FIXTURE_DIR", FIXTURE_DIR)
    monkeypatch.setattr(settings, "WORKERS", 1)
    monkeypatch.setattr(settings, "ENABLE_RELAX", True)


@pytest.fixture
def fixture_file():
    def resolve(name: str) -> str:
        return os.path.join(FIXTURE_DIR, name)
    return resolve


@pytest.fixture
def c6():
    return cycle_graph(6)


@pytest.fixture
def c6_partition(c6):
    return load_partition(os.path.join(FIXTURE_DIR, "c6.part"), c6)


@pytest.fixture(scope="session")
def k16():
    return ams_graph(AmsParams(2, 4))


@pytest.fixture(scope="session")
def k16_partition(k16):
    return greedy_partition(k16)


@pytest.fixture
def edgeless4():
    return empty_graph(4)


@pytest.fixture
def triangle():
    return load_graph(os.path.join(FIXTURE_DIR, "triangle.graph"))
