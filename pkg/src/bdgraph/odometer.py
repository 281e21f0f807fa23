"""The graph odometer: points of the block space and the partial maps sigma_e.

A point is a sequence of blocks ``y_1, y_2, ...`` with ``y_i`` a path of
length ``k * n_{i-1} < n_i`` and ``s(y_i) = r(y_{i+1})``. Only eventually
trivial points are represented: finitely many explicit blocks followed by
trivial blocks at ``tail``. Trailing trivial blocks are always absorbed into
the tail, so equal points compare equal.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .classify import NOT_SIMPLE, bd_simple
from .derived import build_cycle, graph_isomorphic
from .errors import DomainError, GraphStructureError, GuardError
from .graph import (
    DEFAULT_PATH_GUARD,
    DirectedMultigraph,
    DivisibilitySequence,
    Path,
    block_decompose,
    in_block_set,
    require_admissible,
)


@dataclass(frozen=True)
class OdometerPoint:
    blocks: tuple[Path, ...]
    tail: str
    graph: DirectedMultigraph = field(compare=False, repr=False)
    sequence: DivisibilitySequence = field(compare=False, repr=False)

    def block(self, i: int) -> Path:
        """``y_i``, 1-based."""
        if i < 1:
            raise ValueError("blocks are numbered from 1")
        if i <= len(self.blocks):
            return self.blocks[i - 1]
        return Path.trivial(self.tail)

    @property
    def range(self) -> str:
        return self.block(1).range

    def window(self, k: int) -> Path:
        """``y_1 ... y_k``, the level-k coordinate of the point."""
        out = self.block(1)
        for i in range(2, k + 1):
            out = out * self.block(i)
        return out

    def to_mapping(self) -> dict:
        return {"blocks": [b.name for b in self.blocks], "tail": self.tail}

    def __str__(self):
        inner = ", ".join(b.name for b in self.blocks)
        return f"({inner}{', ' if inner else ''}{self.tail}, ...)"


def _validate_blocks(g, seq, blocks, tail) -> None:
    if not g.has_vertex(tail):
        raise GraphStructureError(f"unknown tail vertex {tail!r}")
    for i, b in enumerate(blocks, start=1):
        if not in_block_set(b, i, seq):
            raise DomainError(f"block {i} ({b.name}) has length {len(b)}, not allowed at level {i}")
        nxt = blocks[i].range if i < len(blocks) else tail
        if b.source != nxt:
            raise DomainError(f"block {i} ({b.name}) does not connect to the next block")


def make_point(
    g: DirectedMultigraph, seq: DivisibilitySequence, blocks, tail: str, validate: bool = True
) -> OdometerPoint:
    """Canonicalize a point, validating block membership and compatibility first.

    ``validate=False`` is for internal callers whose blocks are valid by construction.
    """
    blocks = list(blocks)
    if validate:
        _validate_blocks(g, seq, blocks, tail)
    while blocks and blocks[-1].is_trivial:
        blocks.pop()
    return OdometerPoint(tuple(blocks), tail, g, seq)


def tau(g: DirectedMultigraph, w: Path, seq: DivisibilitySequence) -> OdometerPoint:
    """Embed a finite path: its blocks followed by its tail vertex."""
    return make_point(g, seq, block_decompose(w, seq).blocks, w.source, validate=False)


def _is_full(y: OdometerPoint, i: int) -> bool:
    seq = y.sequence
    return len(y.block(i)) == seq.term(i) - seq.term(i - 1)


def in_domain(e: str, y: OdometerPoint) -> bool:
    return y.graph.s(e) == y.range


def sigma(e: str, y: OdometerPoint) -> OdometerPoint:
    """Add the edge e at the front, carrying through full blocks."""
    g, seq = y.graph, y.sequence
    if not in_domain(e, y):
        raise DomainError(f"sigma_{e} undefined: s({e}) = {g.s(e)} but the point has range {y.range}")
    i = 1
    while _is_full(y, i):
        i += 1
    carried = g.edge_path(e)
    for t in range(1, i + 1):
        carried = carried * y.block(t)
    r = g.r(e)
    new = [Path.trivial(r)] * (i - 1) + [carried] + list(y.blocks[i:])
    return make_point(g, seq, new, y.tail, validate=False)


@dataclass(frozen=True)
class RangeMembership:
    """Whether a point lies in R_e, with the level l and the path w' of the witness."""

    member: bool
    level: int | None = None
    rest: Path | None = None


def range_membership(e: str, y: OdometerPoint) -> RangeMembership:
    """R_e: trivial blocks at r(e) before a block ``e w'`` whose last edge is e.

    ``level is None`` with ``member`` True is the all-trivial point at r(e).
    """
    g = y.graph
    r = g.r(e)
    l = 1
    while l <= len(y.blocks) and y.blocks[l - 1].is_trivial and y.blocks[l - 1].range == r:
        l += 1
    if l > len(y.blocks):
        return RangeMembership(y.tail == r)
    b = y.blocks[l - 1]
    if b.is_trivial or b.range != r or b.edges[-1] != e:
        return RangeMembership(False)
    return RangeMembership(True, l, b.segment(0, len(b) - 1))


def sigma_preimage(e: str, y: OdometerPoint) -> OdometerPoint:
    """The unique z in D_e with sigma_e(z) = y; y must lie in R_e at a finite level."""
    g, seq = y.graph, y.sequence
    mem = range_membership(e, y)
    if not mem.member:
        raise DomainError(f"point {y} is not in the range of sigma_{e}")
    if mem.level is None:
        raise DomainError("the all-trivial point is a limit of the range and has no finite preimage")
    l, rest = mem.level, mem.rest
    low = block_decompose(rest, seq).blocks
    low = list(low) + [Path.trivial(rest.source)] * (l - len(low))
    if len(low) > l:
        raise DomainError("preimage blocks overflow the witness level")
    return make_point(g, seq, low + list(y.blocks[l:]), y.tail)


def cylinder_step(g: DirectedMultigraph, e: str, w: Path, n: int) -> Path:
    """The range of the E(n) edge (e, w): the remainder (e w)(n)."""
    if g.s(e) != w.range:
        raise DomainError(f"edge {e} does not extend {w.name}")
    ew = g.edge_path(e) * w
    return ew.head(len(ew) % n)


def orbit(y: OdometerPoint, word) -> list[OdometerPoint]:
    """Apply sigma along ``word`` (first letter first); returns every visited point."""
    out = [y]
    for e in word:
        y = sigma(e, y)
        out.append(y)
    return out


def random_point(
    g: DirectedMultigraph, seq: DivisibilitySequence, rng: random.Random, max_blocks: int = 4
) -> OdometerPoint:
    """A random eventually trivial point with at most ``max_blocks`` explicit blocks."""
    m = rng.randint(0, max_blocks)
    cur = rng.choice(g.vertices)
    tail = cur
    blocks = []
    for i in range(m, 0, -1):
        lo, hi = seq.term(i - 1), seq.term(i)
        length = lo * rng.randrange(hi // lo)
        verts, edges = [cur], []
        for _ in range(length):
            out = g.out_edges(verts[-1])
            if not out:
                break
            e = rng.choice(out)
            edges.append(e.id)
            verts.append(e.dst)
        if len(edges) != length:
            edges, verts = [], [cur]
        p = Path(tuple(verts), tuple(edges))
        blocks.append(p)
        cur = p.range
    blocks.reverse()
    return make_point(g, seq, blocks, tail)


@dataclass(frozen=True)
class SimplicityReport:
    """Per level k and ordered pair (v, u): is there a walk from v to u of length in n_k Z_{>0}?"""

    levels: tuple[int, ...]
    table: dict = field(repr=False)

    @property
    def holds(self) -> bool:
        return all(self.table.values())

    def holds_at(self, k: int) -> bool:
        return all(ok for (lvl, _, _), ok in self.table.items() if lvl == k)

    def failures(self) -> list[tuple[int, str, str]]:
        return sorted(key for key, ok in self.table.items() if not ok)

    def to_mapping(self) -> dict:
        return {
            "holds": self.holds,
            "levels": {str(k): self.holds_at(k) for k in self.levels},
            "failures": [{"level": k, "from": v, "to": u} for k, v, u in self.failures()],
            "table": [
                {"level": k, "from": v, "to": u, "reachable": ok} for (k, v, u), ok in sorted(self.table.items())
            ],
        }


def _product_graph(g: DirectedMultigraph, n: int) -> csr_matrix:
    # nodes (x, rho) with rho the walk length mod n
    idx = {v: i for i, v in enumerate(g.vertices)}
    rows, cols = [], []
    for e in g.edges:
        a, b = idx[e.src], idx[e.dst]
        for rho in range(n):
            rows.append(a * n + rho)
            cols.append(b * n + (rho + 1) % n)
    size = len(g.vertices) * n
    data = np.ones(len(rows), dtype=np.int8)
    return csr_matrix((data, (rows, cols)), shape=(size, size))


def sufficient_simplicity(g: DirectedMultigraph, seq: DivisibilitySequence, levels=None) -> SimplicityReport:
    """Check, for each supplied level, that every vertex reaches every vertex by a
    nonempty walk whose length is a multiple of n_k."""
    require_admissible(g)
    levels = tuple(levels) if levels is not None else tuple(range(1, seq.length + 1))
    idx = {v: i for i, v in enumerate(g.vertices)}
    table = {}
    for k in levels:
        n = seq.term(k)
        prod = _product_graph(g, n)
        _, labels = connected_components(prod, directed=True, connection="strong")
        sizes = np.bincount(labels)
        diag = prod.diagonal()
        for v in g.vertices:
            start = idx[v] * n
            reach = set(breadth_first_order(prod, start, directed=True, return_predecessors=False).tolist())
            for u in g.vertices:
                target = idx[u] * n
                if u != v:
                    table[(k, v, u)] = target in reach
                else:
                    # a nonempty closed walk exists iff the node sits on a cycle
                    table[(k, v, u)] = bool(sizes[labels[start]] > 1 or diag[start])
    return SimplicityReport(levels, table)


@dataclass(frozen=True)
class NoLoopReport:
    """Bounded search for a nontrivial sigma-cycle among finite-path points."""

    consistent: bool
    explored: int
    depth: int
    counterexample: tuple | None = None

    def to_mapping(self) -> dict:
        return {
            "consistent": self.consistent,
            "explored": self.explored,
            "depth": self.depth,
            "counterexample": None if self.counterexample is None else [str(p) for p in self.counterexample],
        }


def no_loops_certificate(
    g: DirectedMultigraph, seq: DivisibilitySequence, depth: int, guard: int = DEFAULT_PATH_GUARD
) -> NoLoopReport:
    """Explore sigma-orbits of tau(x), x a vertex, up to ``depth`` steps and look for cycles."""
    frontier = [tau(g, g.vertex_path(v), seq) for v in g.vertices]
    seen = {p: i for i, p in enumerate(frontier)}
    succ: dict[int, list[int]] = {}
    points = list(frontier)
    for _ in range(depth):
        nxt = []
        for p in frontier:
            out = succ.setdefault(seen[p], [])
            for e in g.out_edges(p.range):
                q = sigma(e.id, p)
                if q not in seen:
                    seen[q] = len(points)
                    points.append(q)
                    nxt.append(q)
                    if len(points) > guard:
                        raise GuardError("odometer exploration", len(points), guard)
                out.append(seen[q])
        frontier = nxt
    cycle = _find_cycle(len(points), succ)
    if cycle is None:
        return NoLoopReport(True, len(points), depth)
    return NoLoopReport(False, len(points), depth, tuple(points[i] for i in cycle))


def _find_cycle(size: int, succ: dict[int, list[int]]):
    color = [0] * size
    parent = [-1] * size
    for root in range(size):
        if color[root]:
            continue
        stack = [(root, iter(succ.get(root, ())))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            child = next(it, None)
            if child is None:
                color[node] = 2
                stack.pop()
                continue
            if color[child] == 0:
                color[child] = 1
                parent[child] = node
                stack.append((child, iter(succ.get(child, ()))))
            elif color[child] == 1:
                cycle = [node]
                while cycle[-1] != child:
                    cycle.append(parent[cycle[-1]])
                return list(reversed(cycle))
    return None


SUFFICIENT_HOLDS = "sufficient-holds"
CYCLE_CASE_REFUTED = "cycle-case-refuted"
UNKNOWN = "unknown"


def cycle_length(g: DirectedMultigraph) -> int | None:
    """j when g is isomorphic to C_j, else None."""
    if len(g.vertices) != len(g.edges):
        return None
    j = len(g.vertices)
    return j if graph_isomorphic(g, build_cycle(j)) is not None else None


@dataclass(frozen=True)
class SimplicityVerdict:
    verdict: str
    sufficient: SimplicityReport
    cycle_j: int | None
    cycle_verdict: str | None

    def to_mapping(self) -> dict:
        return {
            "verdict": self.verdict,
            "sufficient": self.sufficient.to_mapping(),
            "cycle_j": self.cycle_j,
            "cycle_verdict": self.cycle_verdict,
        }


def simplicity_verdict(g: DirectedMultigraph, seq: DivisibilitySequence) -> SimplicityVerdict:
    report = sufficient_simplicity(g, seq)
    j = cycle_length(g)
    cyc = bd_simple(j, seq).verdict if j is not None else None
    if report.holds:
        verdict = SUFFICIENT_HOLDS
    elif cyc == NOT_SIMPLE:
        verdict = CYCLE_CASE_REFUTED
    else:
        verdict = UNKNOWN
    return SimplicityVerdict(verdict, report, j, cyc)
