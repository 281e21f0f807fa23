import random

import pytest

from bdgraph.derived import build_bouquet, build_cycle
from bdgraph.errors import ConsistencyError
from bdgraph.graph import DivisibilitySequence
from bdgraph.ktheory import (
    FinitelyGeneratedAbelianGroup,
    IntegerMatrix,
    connecting_k0,
    delta_matrix,
    delta_pointwise,
    inclusion_matrix,
    k_groups,
    level_k_theory,
    z_action,
)
from bdgraph.odometer import random_point
from bdgraph.snf import identity, matmul

from conftest import corpus_items


def test_delta_matches_pointwise_evaluation():
    rng = random.Random(3)
    for name, g, seq in corpus_items():
        for k in (1, 2):
            delta = delta_matrix(g, seq, k)
            labels = delta.row_labels
            f = {w: rng.randint(-5, 5) for w in labels}
            fvec = [f[w] for w in labels]
            index = {w: i for i, w in enumerate(labels)}
            for _ in range(60):
                y = random_point(g, seq, rng)
                row = delta.entries[index[y.window(k).name]]
                assert delta_pointwise(f, y, k) == sum(a * b for a, b in zip(row, fvec)), name


def test_z_action_is_identity_minus_delta():
    g = build_cycle(1)
    seq = DivisibilitySequence((2, 4))
    assert z_action(g, seq, 1, [1, 0]) == [0, 1]


def test_inclusion_intertwines_on_corpus():
    for name, g, seq in corpus_items():
        for k in (1, 2):
            iota = inclusion_matrix(g, seq, k).as_lists()
            low = delta_matrix(g, seq, k).as_lists()
            high = delta_matrix(g, seq, k + 1).as_lists()
            assert matmul(iota, low) == matmul(high, iota), name


def test_inclusion_needs_refinement():
    with pytest.raises(ValueError):
        inclusion_matrix(build_cycle(1), DivisibilitySequence((2, 4)), 2, 1)


def test_broken_inclusion_is_caught():
    g, seq = build_cycle(1), DivisibilitySequence((2, 4))
    low, high = level_k_theory(g, seq, 1), level_k_theory(g, seq, 2)
    bad = IntegerMatrix.build([[1, 0], [1, 0], [0, 1], [0, 1]], list("abcd"), list("xy"))
    with pytest.raises(ConsistencyError):
        connecting_k0(low, high, bad)


def test_single_loop_dyadic():
    g = build_cycle(1)
    report = k_groups(g, DivisibilitySequence((2, 4, 8, 16)), [1, 2, 3, 4])
    for lvl in report.levels:
        assert lvl.k0 == FinitelyGeneratedAbelianGroup(1)
        assert lvl.k1 == FinitelyGeneratedAbelianGroup(1)
    assert [m.as_lists() for m in report.k1_maps] == [[[1]]] * 3
    assert {abs(m.as_lists()[0][0]) for m in report.k0_maps} == {2}
    assert report.k0_limit == "Z[1/2]" and report.k1_limit == "Z"


def test_single_loop_triadic():
    report = k_groups(build_cycle(1), DivisibilitySequence((3, 9, 27)), [1, 2, 3])
    assert report.k0_limit == "Z[1/3]"


def test_bouquet_torsion():
    g = build_bouquet(2)
    seq = DivisibilitySequence((1, 2, 4))
    assert [str(level_k_theory(g, seq, k).k0) for k in (1, 2, 3)] == ["0", "Z/3", "Z/15"]
    assert all(level_k_theory(g, seq, k).k1.free_rank == 0 for k in (1, 2, 3))


def test_kernel_basis_is_in_kernel():
    for name, g, seq in corpus_items():
        lvl = level_k_theory(g, seq, 2)
        d = lvl.delta.as_lists()
        for v in lvl.kernel_basis:
            assert all(sum(a * b for a, b in zip(row, v)) == 0 for row in d), name


def test_snf_is_valid_for_every_level_matrix():
    for _, g, seq in corpus_items():
        for k in (1, 2, 3):
            lvl = level_k_theory(g, seq, k)
            s = lvl.snf
            assert matmul(matmul(s.U, lvl.delta.as_lists()), s.V) == s.D
            assert matmul(s.U, s.U_inv) == identity(lvl.dim)
            assert matmul(s.V, s.V_inv) == identity(lvl.dim)


def test_matrix_dump_round_trip(tmp_path):
    m = delta_matrix(build_cycle(2), DivisibilitySequence((2, 4)), 1)
    path = tmp_path / "delta.txt"
    path.write_text(m.dump())
    loaded = IntegerMatrix.load(path.read_text())
    assert loaded.entries == m.entries
    with pytest.raises(ValueError):
        IntegerMatrix.load("2 2\n1 2\n")


def test_group_strings():
    assert str(FinitelyGeneratedAbelianGroup(0)) == "0"
    assert str(FinitelyGeneratedAbelianGroup(2, (5,))) == "Z^2 + Z/5"
