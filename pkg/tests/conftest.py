import pathlib

import pytest

from bdgraph.derived import build_bouquet, build_cycle
from bdgraph.graph import DirectedMultigraph, DivisibilitySequence

DATA = pathlib.Path(__file__).parent / "data"


def _g(vertices, edges):
    return DirectedMultigraph.from_edges(vertices, edges)


# Admissible graphs with at most 5 vertices and out-degree at most 3. Each
# carries a sequence small enough that level-3 matrices stay a few hundred wide.
CORPUS = {
    "cycle1": (build_cycle(1), (2, 4, 8)),
    "cycle2": (build_cycle(2), (2, 4, 8)),
    "cycle3": (build_cycle(3), (2, 4, 8)),
    "bouquet2": (build_bouquet(2), (1, 2, 4)),
    "petal": (_g(["u", "w"], [("a", "u", "u"), ("b", "u", "w"), ("c", "w", "u")]), (1, 2, 4)),
    "complete2": (
        _g(["x", "y"], [("p", "x", "x"), ("q", "x", "y"), ("r", "y", "x"), ("t", "y", "y")]),
        (1, 2, 4),
    ),
    "double_edge": (_g(["v1", "v2"], [("f1", "v1", "v2"), ("f2", "v1", "v2"), ("g", "v2", "v1")]), (1, 2, 4)),
    "triangle_chord": (
        _g(["x", "y", "z"], [("a", "x", "y"), ("b", "y", "z"), ("c", "z", "x"), ("d", "x", "z")]),
        (2, 4, 8),
    ),
    "square_loop": (
        _g(
            ["v1", "v2", "v3", "v4"],
            [("a", "v1", "v2"), ("b", "v2", "v3"), ("c", "v3", "v4"), ("d", "v4", "v1"), ("l", "v1", "v1")],
        ),
        (2, 4, 8),
    ),
    "pentagon_chord": (
        _g(
            ["v1", "v2", "v3", "v4", "v5"],
            [("a", "v1", "v2"), ("b", "v2", "v3"), ("c", "v3", "v4"), ("d", "v4", "v5"), ("f", "v5", "v1"), ("h", "v1", "v3")],
        ),
        (2, 4, 8),
    ),
    "two_loops": (_g(["x", "y"], [("a", "x", "x"), ("b", "y", "y")]), (2, 4, 8)),
    "star3": (
        _g(["x", "y", "z"], [("a", "x", "x"), ("b", "x", "y"), ("c", "x", "z"), ("d", "y", "x"), ("f", "z", "x")]),
        (1, 2, 4),
    ),
}


def corpus_items():
    return [(name, g, DivisibilitySequence(seq)) for name, (g, seq) in sorted(CORPUS.items())]


@pytest.fixture(params=sorted(CORPUS))
def corpus_graph(request):
    g, seq = CORPUS[request.param]
    return request.param, g, DivisibilitySequence(seq)


@pytest.fixture
def data_dir():
    return DATA


def _d(name):
    return str(DATA / name)


# One invocation per CLI command, with the exit code it must produce.
CLI_CASES = [
    (["graph", "check", _d("petal.yaml")], 0),
    (["graph", "check", _d("sink.json")], 1),
    (["graph", "reduce", _d("petal.yaml")], 0),
    (["derive", "en", _d("cycle1.yaml"), "--n", "2"], 0),
    (["derive", "eqn", _d("petal.yaml"), "--n", "2"], 0),
    (["derive", "bracket", _d("bouquet2.yaml"), "--n", "2"], 0),
    (["cycle", "decompose", "--j", "4", "--n", "6"], 0),
    (["factor", "verify", _d("double_lift.yaml")], 1),
    (["factor", "canonical", _d("petal.yaml"), "--n", "2", "--k", "2"], 0),
    (["factor", "canonical", _d("petal.yaml"), "--n", "1", "--k", "2", "--bracket"], 0),
    (["factor", "induced", _d("bouquet2.yaml"), "--n", "1", "--k", "2"], 0),
    (["odometer", "orbit", _d("petal.yaml"), "--seq-file", _d("seq248.yaml"), "--start", "u", "--word", "a,a,b,c"], 0),
    (["odometer", "simplicity", _d("petal.yaml"), "--seq", "2,4,8"], 0),
    (["ktheory", "compute", _d("cycle1.yaml"), "--seq", "2,4,8", "--levels", "1,2,3"], 0),
    (["fock", "verify", _d("cycle1.yaml"), "--depth", "4", "--n", "2"], 0),
    (["classify", "invariant", "--j", "6", "--seq", "2,4"], 0),
    (["classify", "simple", "--j", "2", "--seq", "2,4,8", "--extend", "repeat-last"], 0),
    (["classify", "iso", "--j", "3", "--seq", "2,4", "--j2", "1", "--seq2", "6,12"], 0),
]
