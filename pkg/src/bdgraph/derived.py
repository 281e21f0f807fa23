"""Derived graphs E(n), E(=n), E[n], cycle graphs, and their loop structure."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import GraphStructureError, GuardError
from .graph import (
    DEFAULT_PATH_GUARD,
    DirectedMultigraph,
    Edge,
    Path,
    enumerate_paths,
    require_admissible,
)

KIND_EN = "E(n)"
KIND_EQN = "E(=n)"
KIND_BRACKET = "E[n]"
KIND_CYCLE = "cycle"

DEFAULT_ISO_GUARD = 256


def c_label(v: str) -> str:
    return f"c({v})"


def pair_label(a: str, b: str) -> str:
    return f"({a},{b})"


@dataclass(frozen=True)
class DerivedGraph:
    """A derived graph together with the provenance of its vertices and edges.

    ``vertex_paths`` sends a vertex id to the source-graph path it stands for
    (E(n), and the path part of E[n]) or to the trivial path at the source
    vertex (E(=n)). ``edge_pairs`` sends an edge id to its defining pair:
    ``(e, w)`` for E(n), ``(w, x)`` for E(=n), ``(e, "c(v)")`` for the extra
    edges of E[n].
    """

    graph: DirectedMultigraph
    kind: str
    source: DirectedMultigraph = field(repr=False)
    level: int
    vertex_paths: Mapping[str, Path] = field(repr=False)
    edge_pairs: Mapping[str, tuple[Any, Any]] = field(repr=False)

    def path_of(self, vertex_id: str) -> Path:
        return self.vertex_paths[vertex_id]

    def to_mapping(self) -> dict:
        def label(x):
            return x.name if isinstance(x, Path) else x

        return {
            "kind": self.kind,
            "level": self.level,
            "graph": self.graph.to_mapping(),
            "vertex_paths": {v: self.vertex_paths[v].name for v in sorted(self.vertex_paths)},
            "edge_pairs": {e: [label(a), label(b)] for e, (a, b) in sorted(self.edge_pairs.items())},
        }


def _assemble(kind, source, n, vertices, edges, vertex_paths, edge_pairs):
    if len(set(vertices)) != len(vertices):
        raise GraphStructureError(f"{kind} labels collide; vertex and edge identifiers of the source graph overlap")
    return DerivedGraph(
        DirectedMultigraph(tuple(vertices), tuple(edges)), kind, source, n, vertex_paths, edge_pairs
    )


def build_cycle(j: int) -> DirectedMultigraph:
    """C_j: vertices v1..vj, edges e_i from v_i to v_{i+1}, e_j back to v1."""
    if j < 1:
        raise ValueError("cycle length must be >= 1")
    vertices = [f"v{i}" for i in range(1, j + 1)]
    edges = [(f"e{i}", f"v{i}", f"v{i % j + 1}") for i in range(1, j + 1)]
    return DirectedMultigraph.from_edges(vertices, edges)


def build_bouquet(k: int, vertex: str = "v") -> DirectedMultigraph:
    """Single vertex with ``k`` loops ``e1..ek`` (a single loop is named ``e``)."""
    if k < 1:
        raise ValueError("need at least one loop")
    names = ["e"] if k == 1 else [f"e{i}" for i in range(1, k + 1)]
    return DirectedMultigraph.from_edges([vertex], [(name, vertex, vertex) for name in names])


def _en_parts(g, n, guard):
    paths = enumerate_paths(g, n, mode="below", guard=guard)
    vertex_paths = {p.name: p for p in paths}
    edges = []
    edge_pairs = {}
    for w in paths:
        for e in g.out_edges(w.range):
            eid = pair_label(e.id, w.name)
            if len(w) < n - 1:
                dst = (g.edge_path(e.id) * w).name
            else:
                dst = e.dst
            edges.append(Edge(eid, w.name, dst))
            edge_pairs[eid] = (e.id, w)
    if len(edges) > guard:
        raise GuardError(f"E({n}) edge set", len(edges), guard)
    return [p.name for p in paths], edges, vertex_paths, edge_pairs


def build_E_n(g: DirectedMultigraph, n: int, guard: int = DEFAULT_PATH_GUARD) -> DerivedGraph:
    """E(n): vertices E^{<n}; edge (e, w) from w to ew, or to r(e) when |w| = n-1."""
    require_admissible(g)
    if n < 1:
        raise ValueError("level must be >= 1")
    vertices, edges, vertex_paths, edge_pairs = _en_parts(g, n, guard)
    return _assemble(KIND_EN, g, n, vertices, edges, vertex_paths, edge_pairs)


def build_E_eq_n(g: DirectedMultigraph, n: int, guard: int = DEFAULT_PATH_GUARD) -> DerivedGraph:
    """E(=n): vertices E^0; one edge (w, s(w)) from s(w) to r(w) per path of length n."""
    require_admissible(g)
    if n < 1:
        raise ValueError("level must be >= 1")
    paths = enumerate_paths(g, n, mode="exact", guard=guard)
    edges = []
    edge_pairs = {}
    for w in paths:
        eid = pair_label(w.name, w.source)
        edges.append(Edge(eid, w.source, w.range))
        edge_pairs[eid] = (w, w.source)
    vertex_paths = {v: Path.trivial(v) for v in g.vertices}
    return _assemble(KIND_EQN, g, n, list(g.vertices), edges, vertex_paths, edge_pairs)


def build_E_bracket_n(g: DirectedMultigraph, n: int, guard: int = DEFAULT_PATH_GUARD) -> DerivedGraph:
    """E[n]: E(n) plus a copy c(v) of each vertex and edges (e, c(v)) for s(e) = v.

    The extra edge (e, c(v)) ends at the E(n)-vertex ``e`` when n > 1 and at
    r(e) when n = 1.
    """
    require_admissible(g)
    if n < 1:
        raise ValueError("level must be >= 1")
    vertices, edges, vertex_paths, edge_pairs = _en_parts(g, n, guard)
    for v in g.vertices:
        vertices.append(c_label(v))
    for e in g.edges:
        eid = pair_label(e.id, c_label(e.src))
        dst = g.edge_path(e.id).name if n > 1 else e.dst
        edges.append(Edge(eid, c_label(e.src), dst))
        edge_pairs[eid] = (e.id, c_label(e.src))
    return _assemble(KIND_BRACKET, g, n, vertices, edges, vertex_paths, edge_pairs)


@dataclass(frozen=True)
class LoopComponent:
    representative: int
    vertices: tuple[str, ...]
    edges: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class GraphIsomorphism:
    vertex_map: Mapping[str, str]
    edge_map: Mapping[str, str]


@dataclass(frozen=True)
class LoopDecomposition:
    j: int
    n: int
    l: int
    p: int
    omega: tuple[int, ...]
    components: tuple[LoopComponent, ...]
    phi: Mapping[int, GraphIsomorphism] = field(repr=False)
    derived: DerivedGraph = field(repr=False)

    def to_mapping(self) -> dict:
        return {
            "j": self.j,
            "n": self.n,
            "l": self.l,
            "p": self.p,
            "omega": list(self.omega),
            "components": [
                {"representative": c.representative, "vertices": list(c.vertices), "edges": list(c.edges)}
                for c in self.components
            ],
        }


def residue_representatives(j: int, n: int) -> tuple[int, ...]:
    """Smallest index of each class of {1..j} under i -> i + r (mod j), where r = n mod j."""
    r = n % j
    reps = []
    seen = set()
    for i in range(1, j + 1):
        if i in seen:
            continue
        reps.append(i)
        k = i
        while True:
            seen.add(k)
            k = (k - 1 + r) % j + 1
            if k == i:
                break
    return tuple(reps)


def _trace_loop(g: DirectedMultigraph, start: str):
    verts, edges = [start], []
    v = start
    while True:
        out = g.out_edges(v)
        if len(out) != 1:
            raise GraphStructureError(f"vertex {v!r} has out-degree {len(out)}; not a union of loops")
        e = out[0]
        edges.append(e.id)
        v = e.dst
        if v == start:
            return tuple(verts), tuple(edges)
        if v in verts:
            raise GraphStructureError("walk re-entered a loop away from its start")
        verts.append(v)


def loop_decompose(j: int, n: int, guard: int = DEFAULT_PATH_GUARD) -> LoopDecomposition:
    """Split C_j(n) into its gcd(j, n) loops of length lcm(j, n).

    Each component is traced from v_i for a representative i, and phi[i] is the
    isomorphism from C_1(p) sending v to v_i.
    """
    if j < 1 or n < 1:
        raise ValueError("j and n must be >= 1")
    if j * n > guard:
        raise GuardError(f"C_{j}({n})", j * n, guard)
    cj = build_cycle(j)
    dg = build_E_n(cj, n, guard=guard)
    g = dg.graph
    omega = residue_representatives(j, n)
    components = []
    covered = set()
    for i in omega:
        verts, edges = _trace_loop(g, f"v{i}")
        if covered.intersection(verts):
            raise GraphStructureError(f"representative v{i} shares a loop with an earlier representative")
        covered.update(verts)
        components.append(LoopComponent(i, verts, edges))
    if covered != set(g.vertices):
        raise GraphStructureError("representatives do not cover C_j(n)")
    p = components[0].length
    c1p = build_E_n(build_cycle(1), p, guard=guard).graph
    phi = {}
    for comp in components:
        # vertex e^t of C_1(p) (t loops) goes to the t-th vertex along the loop
        vmap = {}
        emap = {}
        for t in range(p):
            name = "v1" if t == 0 else ".".join(["e1"] * t)
            vmap[name] = comp.vertices[t]
            emap[pair_label("e1", name)] = comp.edges[t]
        phi[comp.representative] = GraphIsomorphism(vmap, emap)
    return LoopDecomposition(j, n, len(components), p, omega, tuple(components), phi, dg)


def induced_subgraph(g: DirectedMultigraph, vertices) -> DirectedMultigraph:
    keep = set(vertices)
    return DirectedMultigraph(
        tuple(v for v in g.vertices if v in keep),
        tuple(e for e in g.edges if e.src in keep and e.dst in keep),
    )


def is_isomorphism(g1: DirectedMultigraph, g2: DirectedMultigraph, iso: GraphIsomorphism) -> bool:
    vm, em = iso.vertex_map, iso.edge_map
    if sorted(vm) != list(g1.vertices) or sorted(vm.values()) != list(g2.vertices):
        return False
    if sorted(em) != [e.id for e in g1.edges] or sorted(em.values()) != sorted(e.id for e in g2.edges):
        return False
    for e in g1.edges:
        f = g2.edge(em[e.id])
        if f.src != vm[e.src] or f.dst != vm[e.dst]:
            return False
    return True


def _multiplicities(g):
    mult = {}
    for e in g.edges:
        mult.setdefault((e.src, e.dst), []).append(e.id)
    return mult


def graph_isomorphic(
    g1: DirectedMultigraph, g2: DirectedMultigraph, guard: int = DEFAULT_ISO_GUARD
) -> GraphIsomorphism | None:
    """Backtracking search for an s- and r-preserving bijection, or ``None``."""
    for g in (g1, g2):
        if len(g.vertices) > guard:
            raise GuardError("isomorphism search", len(g.vertices), guard)
    if len(g1.vertices) != len(g2.vertices) or len(g1.edges) != len(g2.edges):
        return None
    m1, m2 = _multiplicities(g1), _multiplicities(g2)

    def signature(g, mult, v):
        loops = len(mult.get((v, v), ()))
        return (len(g.out_edges(v)), len(g.in_edges(v)), loops)

    sig2 = {}
    for v in g2.vertices:
        sig2.setdefault(signature(g2, m2, v), []).append(v)
    sig1 = {v: signature(g1, m1, v) for v in g1.vertices}
    if sorted(sig1.values()) != sorted(signature(g2, m2, v) for v in g2.vertices):
        return None

    # visit vertices so each one after the first in a component touches a visited vertex
    neighbours = {v: set() for v in g1.vertices}
    for e in g1.edges:
        neighbours[e.src].add(e.dst)
        neighbours[e.dst].add(e.src)
    order = []
    placed = set()
    for root in g1.vertices:
        if root in placed:
            continue
        frontier = [root]
        placed.add(root)
        while frontier:
            v = frontier.pop(0)
            order.append(v)
            for u in sorted(neighbours[v]):
                if u not in placed:
                    placed.add(u)
                    frontier.append(u)

    nb2 = {v: set() for v in g2.vertices}
    for e in g2.edges:
        nb2[e.src].add(e.dst)
        nb2[e.dst].add(e.src)

    vmap: dict[str, str] = {}
    used: set[str] = set()

    def consistent(v, w):
        for u, x in vmap.items():
            if len(m1.get((v, u), ())) != len(m2.get((w, x), ())):
                return False
            if len(m1.get((u, v), ())) != len(m2.get((x, w), ())):
                return False
        return True

    def candidates(v):
        mapped_nb = [vmap[u] for u in neighbours[v] if u in vmap]
        pool = sig2.get(sig1[v], [])
        if mapped_nb:
            allowed = set.intersection(*(nb2[x] for x in mapped_nb))
            pool = [w for w in pool if w in allowed]
        return [w for w in pool if w not in used]

    def search(idx):
        if idx == len(order):
            return True
        v = order[idx]
        for w in candidates(v):
            if consistent(v, w):
                vmap[v] = w
                used.add(w)
                if search(idx + 1):
                    return True
                del vmap[v]
                used.discard(w)
        return False

    # recursion depth is the vertex count, bounded by the guard
    if not search(0):
        return None
    emap = {}
    for (a, b), ids in m1.items():
        for e1, e2 in zip(ids, m2[(vmap[a], vmap[b])]):
            emap[e1] = e2
    return GraphIsomorphism(dict(vmap), emap)
