"""Finite directed multigraphs, paths, and the two path factorizations.

Paths are stored in walk order (first traversed edge first) and rendered in
right-to-left product order: the walk ``e1`` then ``e2`` prints as ``e2.e1``
and is the product ``e2 * e1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import AdmissibilityError, GraphStructureError, GuardError, LevelError

DEFAULT_PATH_GUARD = 50_000

EXTEND_REPEAT_LAST = "repeat-last"
EXTEND_STRICT = "strict"


@dataclass(frozen=True, order=True)
class Edge:
    id: str
    src: str
    dst: str


def _check_identifier(kind, name):
    if not isinstance(name, str) or not name or any(ch.isspace() for ch in name):
        raise GraphStructureError(f"{kind} identifier {name!r} must be a non-empty string without whitespace")


@dataclass(frozen=True)
class DirectedMultigraph:
    """Finite graph E = (E^0, E^1, r, s) with opaque string identifiers.

    Vertices and edges are kept sorted so every derived ordering is stable.
    Parallel edges and loops are allowed.
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        vertices = tuple(self.vertices)
        edges = tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        for v in vertices:
            _check_identifier("vertex", v)
        if len(set(vertices)) != len(vertices):
            raise GraphStructureError("duplicate vertex identifiers")
        vset = set(vertices)
        seen = set()
        for e in edges:
            _check_identifier("edge", e.id)
            if e.id in seen:
                raise GraphStructureError(f"duplicate edge id {e.id!r}")
            seen.add(e.id)
            for end in (e.src, e.dst):
                if end not in vset:
                    raise GraphStructureError(f"edge {e.id!r} has unknown endpoint {end!r}")
        object.__setattr__(self, "vertices", tuple(sorted(vertices)))
        object.__setattr__(self, "edges", tuple(sorted(edges, key=lambda e: e.id)))

    @classmethod
    def from_edges(cls, vertices: Iterable[str], edges: Iterable[tuple[str, str, str]]):
        """Build from ``(edge_id, source, range)`` triples."""
        return cls(tuple(vertices), tuple(Edge(*t) for t in edges))

    @classmethod
    def from_mapping(cls, doc: Mapping):
        """Build from the interchange document ``{vertices: [...], edges: [{id, src, dst}]}``."""
        try:
            vertices = list(doc["vertices"])
            edges = [Edge(str(e["id"]), str(e["src"]), str(e["dst"])) for e in doc["edges"]]
        except (KeyError, TypeError) as exc:
            raise GraphStructureError(f"graph document is missing a field: {exc}") from None
        return cls(tuple(str(v) for v in vertices), tuple(edges))

    def to_mapping(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"id": e.id, "src": e.src, "dst": e.dst} for e in self.edges],
        }

    @cached_property
    def _edge_index(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def _out(self) -> dict[str, tuple[Edge, ...]]:
        out = {v: [] for v in self.vertices}
        for e in self.edges:
            out[e.src].append(e)
        return {v: tuple(es) for v, es in out.items()}

    @cached_property
    def _in(self) -> dict[str, tuple[Edge, ...]]:
        inn = {v: [] for v in self.vertices}
        for e in self.edges:
            inn[e.dst].append(e)
        return {v: tuple(es) for v, es in inn.items()}

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._edge_index[edge_id]
        except KeyError:
            raise GraphStructureError(f"unknown edge {edge_id!r}") from None

    def s(self, edge_id: str) -> str:
        return self.edge(edge_id).src

    def r(self, edge_id: str) -> str:
        return self.edge(edge_id).dst

    def out_edges(self, v: str) -> tuple[Edge, ...]:
        return self._out[v]

    def in_edges(self, v: str) -> tuple[Edge, ...]:
        return self._in[v]

    def has_vertex(self, v) -> bool:
        return v in self._out

    def path(self, edge_ids: Sequence[str] = (), start: str | None = None) -> "Path":
        """Path from edge ids given in walk order; ``start`` names the vertex of a trivial path."""
        edge_ids = tuple(edge_ids)
        if not edge_ids:
            if start is None or not self.has_vertex(start):
                raise GraphStructureError(f"trivial path needs a known vertex, got {start!r}")
            return Path((start,), ())
        verts = [self.s(edge_ids[0])]
        if start is not None and start != verts[0]:
            raise GraphStructureError(f"path does not start at {start!r}")
        for eid in edge_ids:
            e = self.edge(eid)
            if e.src != verts[-1]:
                raise GraphStructureError(f"edge {eid!r} does not continue a walk ending at {verts[-1]!r}")
            verts.append(e.dst)
        return Path(tuple(verts), edge_ids)

    def edge_path(self, edge_id: str) -> "Path":
        e = self.edge(edge_id)
        return Path((e.src, e.dst), (e.id,))

    def vertex_path(self, v: str) -> "Path":
        return self.path((), start=v)


@dataclass(frozen=True)
class Path:
    """A walk, stored as its vertex sequence and its edges in walk order."""

    vertices: tuple[str, ...]
    edges: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.vertices) != len(self.edges) + 1:
            raise GraphStructureError("path vertex/edge sequences have inconsistent lengths")

    @classmethod
    def trivial(cls, v: str) -> "Path":
        return cls((v,), ())

    @property
    def source(self) -> str:
        return self.vertices[0]

    @property
    def range(self) -> str:
        return self.vertices[-1]

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def is_trivial(self) -> bool:
        return not self.edges

    def __mul__(self, other: "Path") -> "Path":
        # product order: ``self * other`` walks ``other`` first
        if not isinstance(other, Path):
            return NotImplemented
        if other.range != self.source:
            raise GraphStructureError(
                f"cannot compose {self.name} after {other.name}: range {other.range!r} != source {self.source!r}"
            )
        return Path(other.vertices + self.vertices[1:], other.edges + self.edges)

    def segment(self, start: int, stop: int) -> "Path":
        """Sub-walk covering edges ``start:stop`` in walk order."""
        return Path(self.vertices[start:stop + 1], self.edges[start:stop])

    def head(self, k: int) -> "Path":
        """The range-side segment made of the last ``k`` traversed edges."""
        n = len(self.edges)
        return self.segment(n - k, n)

    @property
    def name(self) -> str:
        if not self.edges:
            return self.vertices[0]
        return ".".join(reversed(self.edges))

    def sort_key(self):
        return (len(self.edges), self.vertices[0], self.edges)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class ValidationReport:
    sinks: tuple[str, ...]
    sources: tuple[str, ...]
    finite: bool = True

    @property
    def admissible(self) -> bool:
        return not self.sinks and not self.sources

    def to_mapping(self) -> dict:
        return {
            "admissible": self.admissible,
            "finite": self.finite,
            "sinks": list(self.sinks),
            "sources": list(self.sources),
        }


def validate_graph(g: DirectedMultigraph) -> ValidationReport:
    """List sinks (no outgoing edge) and sources (no incoming edge)."""
    if not g.vertices:
        raise GraphStructureError("graph has no vertices")
    sinks = tuple(v for v in g.vertices if not g.out_edges(v))
    sources = tuple(v for v in g.vertices if not g.in_edges(v))
    return ValidationReport(sinks=sinks, sources=sources)


def require_admissible(g: DirectedMultigraph) -> None:
    report = validate_graph(g)
    if not report.admissible:
        raise AdmissibilityError(
            f"graph is not admissible: sinks={list(report.sinks)} sources={list(report.sources)}"
        )


def _reachable(g: DirectedMultigraph, starts: Iterable[str]) -> set[str]:
    seen = set()
    stack = list(starts)
    while stack:
        v = stack.pop()
        for e in g.out_edges(v):
            if e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return seen


def reduce_tilde(g: DirectedMultigraph) -> DirectedMultigraph:
    """Restrict to vertices that are the range of infinitely many paths.

    A vertex receives infinitely many paths exactly when some vertex lying on
    a cycle reaches it (reachability is by walks of length >= 0).
    """
    report = validate_graph(g)
    if report.sinks:
        raise AdmissibilityError(f"reduction needs a graph without sinks; sinks={list(report.sinks)}")
    on_cycle = [v for v in g.vertices if v in _reachable(g, [v])]
    keep = set(on_cycle) | _reachable(g, on_cycle)
    edges = [e for e in g.edges if e.src in keep and e.dst in keep]
    return DirectedMultigraph(tuple(v for v in g.vertices if v in keep), tuple(edges))


@dataclass(frozen=True)
class PathCounts:
    level: int
    per_vertex: Mapping[str, int]

    @property
    def total(self) -> int:
        return sum(self.per_vertex.values())


def _layer_counts(g: DirectedMultigraph, n: int) -> list[dict[str, int]]:
    # layers[m][x] = number of paths of length m with source x
    layers = [{v: 1 for v in g.vertices}]
    for _ in range(n):
        prev = layers[-1]
        layers.append({v: sum(prev[e.dst] for e in g.out_edges(v)) for v in g.vertices})
    return layers


def path_counts(g: DirectedMultigraph, n: int) -> PathCounts:
    """d_E(n, x): paths of length < n with initial vertex x."""
    if n < 0:
        raise ValueError("level must be non-negative")
    layers = _layer_counts(g, max(n - 1, 0))
    per_vertex = {v: sum(layer[v] for layer in layers[:n]) for v in g.vertices}
    return PathCounts(n, per_vertex)


def count_paths_exact(g: DirectedMultigraph, n: int) -> int:
    return sum(_layer_counts(g, n)[n].values())


def enumerate_paths(
    g: DirectedMultigraph,
    n: int,
    mode: str = "below",
    guard: int = DEFAULT_PATH_GUARD,
) -> list[Path]:
    """Paths of length exactly ``n`` (``mode="exact"``) or strictly below ``n`` (``mode="below"``)."""
    if mode not in ("below", "exact"):
        raise ValueError(f"unknown enumeration mode {mode!r}")
    if n < 0 or (mode == "below" and n < 1):
        raise ValueError(f"invalid level {n} for mode {mode!r}")
    size = path_counts(g, n).total if mode == "below" else count_paths_exact(g, n)
    if size > guard:
        raise GuardError(f"path enumeration ({mode} {n})", size, guard)
    layer = [Path.trivial(v) for v in g.vertices]
    out = list(layer) if mode == "below" else []
    top = n - 1 if mode == "below" else n
    for m in range(1, top + 1):
        layer = [Path(p.vertices + (e.dst,), p.edges + (e.id,)) for p in layer for e in g.out_edges(p.range)]
        if mode == "below" or m == n:
            out.extend(layer)
    if mode == "exact" and n == 0:
        out = layer
    return sorted(out, key=Path.sort_key)


@dataclass(frozen=True)
class Remainder:
    head: Path
    segments: tuple[Path, ...]

    def recompose(self) -> Path:
        out = self.head
        for seg in reversed(self.segments):
            out = out * seg
        return out


def remainder(w: Path, n: int) -> Remainder:
    """Factor ``w = w(n) v_k ... v_1`` with ``|v_i| = n`` and ``|w(n)| < n``.

    ``segments[0]`` is ``v_1``, the first segment walked.
    """
    if n < 1:
        raise ValueError("remainder level must be >= 1")
    length = len(w)
    k, rem = divmod(length, n)
    segments = tuple(w.segment(i * n, (i + 1) * n) for i in range(k))
    return Remainder(w.segment(k * n, length), segments)


def remainder_head(w: Path, n: int) -> Path:
    return w.head(len(w) % n)


@dataclass(frozen=True)
class DivisibilitySequence:
    """A finite prefix n_1 | n_2 | ... | n_K with an extension policy.

    Consecutive duplicates are collapsed. ``term(0)`` is 1. Beyond the prefix,
    ``repeat-last`` keeps multiplying by the last ratio n_K / n_{K-1}; a prefix
    whose only ratio is 1 (the prefix ``(1,)``) extends by doubling.
    """

    prefix: tuple[int, ...]
    extend: str = EXTEND_REPEAT_LAST

    def __post_init__(self):
        if self.extend not in (EXTEND_REPEAT_LAST, EXTEND_STRICT):
            raise ValueError(f"unknown extension policy {self.extend!r}")
        terms = []
        for t in self.prefix:
            if isinstance(t, bool) or not isinstance(t, int) or t < 1:
                raise ValueError(f"sequence terms must be positive integers, got {t!r}")
            if terms and t % terms[-1] != 0:
                raise ValueError(f"sequence is not a divisibility chain: {terms[-1]} does not divide {t}")
            if not terms or t != terms[-1]:
                terms.append(t)
        if not terms:
            raise ValueError("sequence prefix is empty")
        object.__setattr__(self, "prefix", tuple(terms))
        object.__setattr__(self, "_terms", [1] + terms)

    @classmethod
    def parse(cls, text: str, extend: str = EXTEND_REPEAT_LAST) -> "DivisibilitySequence":
        try:
            terms = tuple(int(t) for t in text.replace(" ", "").split(",") if t)
        except ValueError:
            raise ValueError(f"cannot parse sequence {text!r}") from None
        return cls(terms, extend)

    @classmethod
    def from_mapping(cls, doc: Mapping) -> "DivisibilitySequence":
        return cls(tuple(doc["prefix"]), doc.get("extend", EXTEND_REPEAT_LAST))

    def to_mapping(self) -> dict:
        return {"prefix": list(self.prefix), "extend": self.extend}

    @property
    def length(self) -> int:
        return len(self.prefix)

    @property
    def last_multiplier(self) -> int:
        prev = self.prefix[-2] if len(self.prefix) > 1 else 1
        m = self.prefix[-1] // prev
        return m if m > 1 else 2

    def term(self, i: int) -> int:
        """n_i, 1-based; ``term(0) == 1``."""
        terms = self._terms
        if 0 <= i < len(terms):
            return terms[i]
        if i < 0:
            raise ValueError("negative level")
        if self.extend == EXTEND_STRICT:
            raise LevelError(f"level {i} lies beyond the strict prefix of length {len(self.prefix)}")
        m = self.last_multiplier
        while len(terms) <= i:
            terms.append(terms[-1] * m)
        return terms[i]

    def multiplier(self, i: int) -> int:
        """m_i = n_{i+1} / n_i."""
        return self.term(i + 1) // self.term(i)

    def is_extended(self, i: int) -> bool:
        return i > len(self.prefix)

    def levels_covering(self, length: int) -> int:
        """Smallest K >= 1 with n_K > length."""
        k = 1
        while self.term(k) <= length:
            k += 1
        return k

    def subsequence(self, indices: Iterable[int]) -> "DivisibilitySequence":
        return DivisibilitySequence(tuple(self.term(i) for i in indices), self.extend)


def in_block_set(p: Path, i: int, seq: DivisibilitySequence) -> bool:
    """Membership in X_i: length a multiple of n_{i-1} and below n_i."""
    return len(p) % seq.term(i - 1) == 0 and len(p) < seq.term(i)


@dataclass(frozen=True)
class BlockDecomposition:
    """``path = w_1 w_2 ... w_k`` with ``w_i`` in X_i; ``w_1`` is the range-side block."""

    blocks: tuple[Path, ...]
    path: Path
    sequence: DivisibilitySequence = field(compare=False)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def recompose(self) -> Path:
        out = self.blocks[0]
        for b in self.blocks[1:]:
            out = out * b
        return out


def block_decompose(w: Path, seq: DivisibilitySequence) -> BlockDecomposition:
    """The unique block decomposition of ``w`` along ``seq``.

    ``w_1 ... w_i`` is the remainder ``w(n_i)``, so block ``i`` sits between
    the remainders at levels ``i-1`` and ``i``. Trailing trivial blocks are
    trimmed, keeping at least one block.
    """
    length = len(w)
    levels = seq.levels_covering(length)
    rems = [0] + [length % seq.term(i) for i in range(1, levels + 1)]
    blocks = [w.segment(length - rems[i], length - rems[i - 1]) for i in range(1, levels + 1)]
    while len(blocks) > 1 and blocks[-1].is_trivial:
        blocks.pop()
    return BlockDecomposition(tuple(blocks), w, seq)
