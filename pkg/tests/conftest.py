from __future__ import annotations

import re
from pathlib import Path

import pytest

from epsilite.model import Access, Model, Repository
from epsilite.modelio import load_metamodel, load_model
from epsilite.values import Sequence

DATA = Path(__file__).parent / "data"
SCRIPTS = DATA / "scripts"

# G1 as adjacency data, node i <-> "n{i+1}", in the fixture's edge order
G1_NODES = 4
G1_EDGES = [(0, 1), (1, 2), (2, 0), (1, 1)]


def script(name: str) -> str:
    return (SCRIPTS / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def graph_mm():
    return load_metamodel(DATA / "graph.mm")


@pytest.fixture(scope="session")
def evolved_mm():
    return load_metamodel(DATA / "evolved.mm")


@pytest.fixture(scope="session")
def final_mm():
    return load_metamodel(DATA / "final.mm")


@pytest.fixture
def g1(graph_mm):
    return load_model(DATA / "g1.model", graph_mm, name="G")


@pytest.fixture
def g2(graph_mm):
    return load_model(DATA / "g2.model", graph_mm, name="G")


def build_graph(mm, n: int, edges: list[tuple[int, int]], access: Access = Access.READ_WRITE) -> Model:
    """A Graph model with nodes n1..n<n> and the given edges, built through the model API."""
    m = Model("G", mm)
    g = m.instantiate("Graph", "g")
    nodes = []
    for i in range(n):
        node = m.instantiate("Node", f"n{i + 1}")
        m.set_feature(node, "name", f"n{i + 1}")
        nodes.append(node)
    m.set_feature(g, "nodes", Sequence(nodes))
    for k, (s, t) in enumerate(edges):
        e = m.instantiate("Edge", f"e{k + 1}")
        m.set_feature(e, "src", nodes[s])
        m.set_feature(e, "trg", nodes[t])
        m.add_to_slot(g, "edges", e)
    m.access = access
    return m


def node_index(element) -> int:
    return int(re.fullmatch(r"n(\d+)", element.slots["name"]).group(1)) - 1


def repo(*models) -> Repository:
    return Repository(models)


# -- acceptance reporting -----------------------------------------------------

_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, [title, True])
    if report.failed:
        entry[1] = False


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")
