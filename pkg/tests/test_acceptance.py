"""Acceptance suite: one PASS/FAIL line per criterion, with its time budget.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even under
capture) or directly with ``python tests/test_acceptance.py``.
"""

import itertools
import json
import os
import random
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from math import gcd, lcm

import networkx as nx
import pytest
import sympy

from bdgraph.classify import ISOMORPHIC, NOT_ISOMORPHIC, bd_isomorphic
from bdgraph.derived import build_bouquet, build_cycle, build_E_n, graph_isomorphic, induced_subgraph, is_isomorphism, loop_decompose
from bdgraph.errors import GuardError
from bdgraph.factor import canonical_m, verify_factor_map
from bdgraph.fock import (
    PeriodicWeightFunction,
    TruncatedFockSpace,
    block_decomposition,
    build_generators,
    check_generators,
    check_periodic_family,
    decompose_T_e,
    gauge_check,
    periodic_generators,
    verify_tck,
)
from bdgraph.graph import DivisibilitySequence, enumerate_paths, remainder_head
from bdgraph.ktheory import delta_matrix, inclusion_matrix, k_groups, level_k_theory
from bdgraph.odometer import cylinder_step, random_point, sigma, sufficient_simplicity, tau
from bdgraph.snf import determinant, identity, matmul

sys.path.insert(0, os.path.dirname(__file__))
from conftest import CLI_CASES, CORPUS, corpus_items  # noqa: E402

EXHAUSTIVE_PATH_LIMIT = 20000


def _report(number, budget, check):
    start = time.perf_counter()
    ok, detail = check()
    elapsed = time.perf_counter() - start
    within = budget is None or elapsed < budget
    status = "PASS" if ok and within else "FAIL"
    limit = "no limit" if budget is None else f"limit {budget:g}s"
    line = f"criterion {number:>2}: {status}  {elapsed:6.2f}s ({limit})  {detail}"
    return ok and within, line


def _emit(line, capsys=None):
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


def dimension_formulas():
    for n in range(1, 9):
        if len(build_E_n(build_cycle(1), n).graph.vertices) != n:
            return False, f"C1 at n={n}"
    for k in (2, 3):
        for n in range(1, 6):
            if len(build_E_n(build_bouquet(k), n).graph.vertices) != (k**n - 1) // (k - 1):
                return False, f"{k}-loop bouquet at n={n}"
    return True, "C1 n<=8, k-loop bouquets k in {2,3} n<=5"


def _is_simple_loop(h, length):
    return (
        h.number_of_nodes() == length
        and h.number_of_edges() == length
        and all(h.in_degree(v) == 1 and h.out_degree(v) == 1 for v in h.nodes)
        and nx.is_strongly_connected(h)
    )


def loop_components():
    for j in range(1, 9):
        for n in range(1, 13):
            dec = loop_decompose(j, n)
            p = lcm(j, n)
            graph = dec.derived.graph
            h = nx.MultiDiGraph()
            h.add_nodes_from(graph.vertices)
            h.add_edges_from((e.src, e.dst) for e in graph.edges)
            comps = list(nx.weakly_connected_components(h))
            if len(comps) != gcd(j, n) or dec.l != gcd(j, n):
                return False, f"j={j} n={n}: {len(comps)} components"
            model = build_E_n(build_cycle(1), p).graph
            for comp in comps:
                if not _is_simple_loop(h.subgraph(comp), p):
                    return False, f"j={j} n={n}: component is not a loop of length {p}"
                sub = induced_subgraph(graph, comp)
                if graph_isomorphic(model, sub) is None:
                    return False, f"j={j} n={n}: component not isomorphic to C1({p})"
            for comp in dec.components:
                if not is_isomorphism(model, induced_subgraph(graph, comp.vertices), dec.phi[comp.representative]):
                    return False, f"j={j} n={n}: explicit isomorphism fails"
    return True, "j<=8, n<=12: gcd(j,n) loops of length lcm(j,n), each isomorphic to C1(lcm)"


def _random_walk(g, rng, length):
    v = rng.choice(g.vertices)
    edges = []
    for _ in range(length):
        e = rng.choice(g.out_edges(v))
        edges.append(e.id)
        v = e.dst
    return g.path(edges, g.edge(edges[0]).src) if edges else g.vertex_path(v)


def factor_suite():
    rng = random.Random(2024)
    exhaustive = sampled = 0
    for name, (g, _) in CORPUS.items():
        for n in (1, 2, 3):
            for k in (1, 2, 3):
                report = verify_factor_map(canonical_m(g, n, k).map)
                if not report.is_regular:
                    return False, f"{name} n={n} k={k}: {report.to_mapping()}"
                try:
                    paths = enumerate_paths(g, 3 * n * k + 1, guard=EXHAUSTIVE_PATH_LIMIT)
                    exhaustive += 1
                except GuardError:
                    paths = [_random_walk(g, rng, rng.randint(0, 3 * n * k)) for _ in range(2000)]
                    sampled += 1
                for w in paths:
                    if remainder_head(remainder_head(w, n * k), n) != remainder_head(w, n):
                        return False, f"{name}: coherence fails on {w.name}"
    return True, (
        f"{len(CORPUS)} graphs, n,k<=3 regular; coherence exhaustive on {exhaustive} cases, "
        f"2000 sampled paths on {sampled} cases above {EXHAUSTIVE_PATH_LIMIT} paths"
    )


def odometer_conjugacy():
    count = 0
    for name, g, seq in corpus_items():
        for w in enumerate_paths(g, 11, guard=10**6):
            y = tau(g, w, seq)
            for e in g.out_edges(w.range):
                count += 1
                if sigma(e.id, y) != tau(g, g.edge_path(e.id) * w, seq):
                    return False, f"{name}: sigma_{e.id}(tau({w.name}))"
    return True, f"{count} pairs (e, w) with |w| <= 10"


def cylinder_covariance():
    rng = random.Random(5)
    checks = 0
    for name, g, seq in corpus_items():
        for _ in range(1000):
            y = random_point(g, seq, rng)
            for e in g.out_edges(y.range):
                z = sigma(e.id, y)
                for k in (1, 2, 3):
                    checks += 1
                    if z.window(k) != cylinder_step(g, e.id, y.window(k), seq.term(k)):
                        return False, f"{name}: level {k} at {y}"
    return True, f"1000 points per graph, {checks} level checks"


def _snf_valid(lvl):
    s, a = lvl.snf, lvl.delta.as_lists()
    return (
        matmul(matmul(s.U, a), s.V) == s.D
        and matmul(s.U, s.U_inv) == identity(lvl.dim)
        and matmul(s.V, s.V_inv) == identity(lvl.dim)
        and abs(determinant(s.U)) == 1
        and abs(determinant(s.V)) == 1
    )


def k_theory_mechanics():
    for name, g, seq in corpus_items():
        for k in (1, 2):
            iota = inclusion_matrix(g, seq, k).as_lists()
            if matmul(iota, delta_matrix(g, seq, k).as_lists()) != matmul(delta_matrix(g, seq, k + 1).as_lists(), iota):
                return False, f"{name}: inclusion does not intertwine at level {k}"
        for k in (1, 2, 3):
            if not _snf_valid(level_k_theory(g, seq, k)):
                return False, f"{name}: invalid SNF at level {k}"
    report = k_groups(build_cycle(1), DivisibilitySequence((2, 4, 8, 16)), [1, 2, 3, 4])
    if not all(_snf_valid(lvl) for lvl in report.levels):
        return False, "C1: invalid SNF"
    if any(str(lvl.k0) != "Z" or str(lvl.k1) != "Z" for lvl in report.levels):
        return False, "C1: level groups are not Z"
    if any(m.as_lists() != [[1]] for m in report.k1_maps):
        return False, "C1: K1 maps are not the identity"
    multipliers = [abs(m.as_lists()[0][0]) for m in report.k0_maps]
    if len(set(multipliers)) != 1:
        return False, f"C1: K0 multipliers vary {multipliers}"
    return True, f"intertwining and SNF on corpus; C1 dyadic K0 multiplier {multipliers[0]}, K1 identity"


def _multiplier_prefixes():
    for length in range(1, 5):
        for mults in itertools.product((2, 3, 4), repeat=length):
            terms, n = [], 1
            for m in mults:
                n *= m
                terms.append(n)
            yield tuple(terms)


def simplicity_cross_check():
    petal, _ = CORPUS["petal"]
    tested = 0
    for prefix in _multiplier_prefixes():
        seq = DivisibilitySequence(prefix)
        for j in range(1, 9):
            tested += 1
            holds = sufficient_simplicity(build_cycle(j), seq).holds
            if holds != all(gcd(j, n) == 1 for n in prefix):
                return False, f"C{j} with {prefix}"
        if not sufficient_simplicity(petal, seq).holds:
            return False, f"petal fails with {prefix}"
    return True, f"{tested} cycle cases; petal passes all {tested // 8} prefixes"


def classification():
    def s(*t):
        return DivisibilitySequence(t)

    cases = [
        (((3, s(2, 4)), (1, s(6, 12))), ISOMORPHIC),
        (((2, s(2, 4)), (1, s(2, 4))), NOT_ISOMORPHIC),
        (((1, s(2, 4)), (1, s(4, 16))), ISOMORPHIC),
    ]
    for (a, b), want in cases:
        got = bd_isomorphic(a, b).verdict
        if got != want:
            return False, f"{a[0]} vs {b[0]}: {got}"
    return True, "three decisions match"


def fock_suite():
    rng = random.Random(9)
    checked = 0

    def bad(results):
        nonlocal checked
        checked += len(results)
        return [r for r in results if not r.holds]

    for name, (g, _) in CORPUS.items():
        space = TruncatedFockSpace(g, 4)
        gens = build_generators(space)
        if bad(verify_tck(space, gens.L, gens.P)) or bad(check_generators(space, gens)):
            return False, f"{name}: TCK or vacuum formula"
        for n in (1, 2, 3):
            if bad(check_periodic_family(periodic_generators(space, n))):
                return False, f"{name}: periodic family at n={n}"
        for k, m in ((0, 1), (1, 2), (1, 4)):
            if bad(gauge_check(space, k, m, n=2)):
                return False, f"{name}: gauge at {k}/{m}"
        lam = PeriodicWeightFunction.from_callable(
            g, 2, lambda p: sympy.Rational(rng.randint(-5, 5), rng.randint(1, 5)) + sympy.I * rng.randint(-3, 3)
        )
        for e in g.edges:
            checked += 1
            if not decompose_T_e(space, e.id, lam).holds:
                return False, f"{name}: decomposition of T_{e.id}"
    for g in (build_cycle(1), build_bouquet(2)):
        report = block_decomposition(g, 2, 4)
        checked += len(report.blocks)
        if not report.holds:
            return False, f"block table fails: {report.to_mapping()['failures'][:1]}"
    return True, f"{checked} exact identities at depth 4 (range-sum for 0<|w|<n is the rho-kernel witness)"


_DRIVER = """
import io, json, sys
from bdgraph.cli import run
out = []
for argv in json.load(sys.stdin):
    buf = io.StringIO()
    code = run(argv, buf, io.StringIO())
    out.append([code, buf.getvalue()])
json.dump(out, sys.stdout)
"""


def _cli_outputs(seed):
    # a fresh interpreter per seed, so set and dict ordering cannot leak into the output
    env = dict(os.environ, PYTHONHASHSEED=str(seed))
    argvs = json.dumps([argv for argv, _ in CLI_CASES])
    proc = subprocess.run(
        [sys.executable, "-c", _DRIVER], input=argvs, capture_output=True, text=True, env=env, check=True
    )
    return json.loads(proc.stdout)


def determinism():
    with ThreadPoolExecutor(max_workers=2) as pool:
        first, second = pool.map(_cli_outputs, (0, 1))
    for (argv, expected), a, b in zip(CLI_CASES, first, second):
        if a != b or a[0] != expected:
            return False, f"{' '.join(argv[:2])} differs between runs"
    return True, f"{len(CLI_CASES)} commands byte-identical across two processes with different hash seeds"


CRITERIA = [
    (1, 1, dimension_formulas),
    (2, 10, loop_components),
    (3, 30, factor_suite),
    (4, 30, odometer_conjugacy),
    (5, 30, cylinder_covariance),
    (6, 60, k_theory_mechanics),
    (7, 60, simplicity_cross_check),
    (8, 1, classification),
    (9, 120, fock_suite),
    (10, None, determinism),
]


@pytest.mark.parametrize("number,budget,check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, budget, check, capsys):
    ok, line = _report(number, budget, check)
    _emit(line, capsys)
    assert ok, line


if __name__ == "__main__":
    results = [_report(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
