import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdgraph.derived import build_bouquet, build_cycle
from bdgraph.errors import AdmissibilityError, GraphStructureError, GuardError, LevelError
from bdgraph.graph import (
    DirectedMultigraph,
    DivisibilitySequence,
    Path,
    block_decompose,
    count_paths_exact,
    enumerate_paths,
    in_block_set,
    path_counts,
    reduce_tilde,
    remainder,
    remainder_head,
    require_admissible,
    validate_graph,
)

from conftest import CORPUS


def test_rejects_unknown_endpoint():
    with pytest.raises(GraphStructureError):
        DirectedMultigraph.from_edges(["v"], [("e", "v", "w")])


def test_rejects_duplicate_edge_id():
    with pytest.raises(GraphStructureError):
        DirectedMultigraph.from_edges(["v"], [("e", "v", "v"), ("e", "v", "v")])


def test_parallel_edges_are_kept():
    g = DirectedMultigraph.from_edges(["v1", "v2"], [("f1", "v1", "v2"), ("f2", "v1", "v2"), ("g", "v2", "v1")])
    assert [e.id for e in g.out_edges("v1")] == ["f1", "f2"]


def test_validate_reports_sinks_and_sources():
    g = DirectedMultigraph.from_edges(["x", "y"], [("f", "x", "y")])
    report = validate_graph(g)
    assert report.sinks == ("y",) and report.sources == ("x",)
    assert not report.admissible
    with pytest.raises(AdmissibilityError):
        require_admissible(g)


def test_corpus_is_admissible():
    for g, _ in CORPUS.values():
        assert validate_graph(g).admissible
        assert len(g.vertices) <= 5
        assert max(len(g.out_edges(v)) for v in g.vertices) <= 3


def test_reduce_keeps_cycles_and_what_they_reach():
    g = DirectedMultigraph.from_edges(
        ["s", "a", "b"], [("in", "s", "a"), ("loop", "a", "a"), ("out", "a", "b"), ("back", "b", "b")]
    )
    reduced = reduce_tilde(g)
    assert reduced.vertices == ("a", "b")
    assert {e.id for e in reduced.edges} == {"loop", "out", "back"}


def test_reduce_rejects_sinks():
    g = DirectedMultigraph.from_edges(["a", "b"], [("loop", "a", "a"), ("out", "a", "b")])
    with pytest.raises(AdmissibilityError):
        reduce_tilde(g)


def test_path_product_order():
    g = build_cycle(2)
    e1, e2 = g.edge_path("e1"), g.edge_path("e2")
    w = e2 * e1
    assert w.edges == ("e1", "e2")
    assert w.name == "e2.e1"
    assert w.source == "v1" and w.range == "v1"
    with pytest.raises(GraphStructureError):
        e1 * e1


def test_path_counts_match_adjacency_powers():
    # independent count: sum of entries of A^0 + ... + A^{n-1}
    for g, _ in CORPUS.values():
        idx = {v: i for i, v in enumerate(g.vertices)}
        a = np.zeros((len(idx), len(idx)), dtype=np.int64)
        for e in g.edges:
            a[idx[e.dst], idx[e.src]] += 1
        power = np.eye(len(idx), dtype=np.int64)
        total = 0
        for n in range(1, 7):
            total += int(power.sum())
            power = a @ power
            assert path_counts(g, n).total == total
            assert len(enumerate_paths(g, n)) == total
            assert count_paths_exact(g, n) == int(power.sum())


def test_enumerate_guard():
    with pytest.raises(GuardError):
        enumerate_paths(build_bouquet(2), 12, guard=100)


def test_remainder_on_loop():
    g = build_cycle(1)
    w = g.path(["e1"] * 7)
    r = remainder(w, 3)
    assert len(r.head) == 1
    assert [len(s) for s in r.segments] == [3, 3]
    assert r.recompose() == w
    assert remainder_head(g.path(["e1"] * 6), 3).is_trivial


def test_block_decomposition_example():
    g = build_cycle(1)
    w = g.path(["e1"] * 7)
    dec = block_decompose(w, DivisibilitySequence((2, 6)))
    assert dec.lengths == (1, 0, 6)
    assert dec.recompose() == w


def test_block_decomposition_uses_extension():
    g = build_cycle(1)
    dec = block_decompose(g.path(["e1"] * 20), DivisibilitySequence((2, 4)))
    assert dec.lengths == (0, 0, 4, 0, 16)


def test_sequence_collapses_duplicates_and_extends():
    seq = DivisibilitySequence((2, 2, 6))
    assert seq.prefix == (2, 6)
    assert [seq.term(i) for i in range(5)] == [1, 2, 6, 18, 54]
    assert DivisibilitySequence((1,)).term(3) == 4


def test_sequence_rejects_non_chain():
    with pytest.raises(ValueError):
        DivisibilitySequence((2, 3))
    with pytest.raises(ValueError):
        DivisibilitySequence(())


def test_strict_sequence_stops():
    seq = DivisibilitySequence((2, 4), extend="strict")
    assert seq.term(2) == 4
    with pytest.raises(LevelError):
        seq.term(3)


def test_sequence_round_trip():
    seq = DivisibilitySequence.parse("2, 4,12", "strict")
    assert DivisibilitySequence.from_mapping(seq.to_mapping()) == seq


def test_graph_round_trip():
    for g, _ in CORPUS.values():
        assert DirectedMultigraph.from_mapping(g.to_mapping()) == g


@st.composite
def path_and_sequence(draw):
    name = draw(st.sampled_from(sorted(CORPUS)))
    g, _ = CORPUS[name]
    start = draw(st.sampled_from(g.vertices))
    length = draw(st.integers(0, 40))
    edges, v = [], start
    for _ in range(length):
        e = draw(st.sampled_from(g.out_edges(v)))
        edges.append(e.id)
        v = e.dst
    mults = draw(st.lists(st.integers(1, 4), min_size=1, max_size=4))
    terms, n = [], 1
    for m in mults:
        n *= m
        terms.append(n)
    return g.path(edges, start), DivisibilitySequence(tuple(terms))


@settings(max_examples=300, deadline=None)
@given(path_and_sequence())
def test_block_decomposition_properties(data):
    w, seq = data
    dec = block_decompose(w, seq)
    assert dec.recompose() == w
    for i, b in enumerate(dec.blocks, start=1):
        assert in_block_set(b, i, seq)
    # w_1 ... w_i is the remainder at level i
    for i in range(1, len(dec.blocks) + 1):
        prefix = dec.blocks[0]
        for b in dec.blocks[1:i]:
            prefix = prefix * b
        assert prefix == remainder_head(w, seq.term(i))


@settings(max_examples=200, deadline=None)
@given(path_and_sequence(), st.integers(1, 6))
def test_remainder_properties(data, n):
    w, _ = data
    r = remainder(w, n)
    assert r.recompose() == w
    assert len(r.head) == len(w) % n
    assert all(len(s) == n for s in r.segments)


def test_trivial_path_name_is_vertex():
    assert Path.trivial("v").name == "v"
