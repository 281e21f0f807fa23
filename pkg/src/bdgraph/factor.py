"""Factor maps between finite graphs and the canonical maps E(nk) -> E(n)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .derived import DerivedGraph, build_E_bracket_n, build_E_n, c_label, pair_label
from .errors import GraphStructureError, PreconditionError
from .graph import DEFAULT_PATH_GUARD, DirectedMultigraph, remainder_head


@dataclass(frozen=True)
class FactorMap:
    """A vertex map and an edge map from ``source`` (F) to ``target`` (E)."""

    source: DirectedMultigraph = field(repr=False)
    target: DirectedMultigraph = field(repr=False)
    vertex_map: Mapping[str, str]
    edge_map: Mapping[str, str]

    def to_mapping(self) -> dict:
        return {
            "vertex_map": {k: self.vertex_map[k] for k in sorted(self.vertex_map)},
            "edge_map": {k: self.edge_map[k] for k in sorted(self.edge_map)},
        }


@dataclass(frozen=True)
class Violation:
    axiom: str
    item: str
    detail: str

    def to_mapping(self) -> dict:
        return {"axiom": self.axiom, "item": self.item, "detail": self.detail}


@dataclass(frozen=True)
class FactorMapReport:
    violations: tuple[Violation, ...]
    regularity_violations: tuple[Violation, ...]

    @property
    def is_factor_map(self) -> bool:
        return not self.violations

    @property
    def is_regular(self) -> bool:
        return self.is_factor_map and not self.regularity_violations

    def to_mapping(self) -> dict:
        return {
            "factor_map": self.is_factor_map,
            "regular": self.is_regular,
            "violations": [v.to_mapping() for v in self.violations],
            "regularity_violations": [v.to_mapping() for v in self.regularity_violations],
        }


def _check_total(m: FactorMap) -> None:
    F, E = m.source, m.target
    if set(m.vertex_map) != set(F.vertices):
        raise GraphStructureError("vertex map is not total on the source graph")
    if set(m.edge_map) != {e.id for e in F.edges}:
        raise GraphStructureError("edge map is not total on the source graph")
    for v, x in m.vertex_map.items():
        if not E.has_vertex(x):
            raise GraphStructureError(f"vertex {v!r} maps to unknown vertex {x!r}")
    for e, f in m.edge_map.items():
        E.edge(f)


def verify_factor_map(m: FactorMap) -> FactorMapReport:
    """Check endpoint compatibility (i), unique edge lifting (ii) and regularity (iii).

    Every violation is reported, not only the first.
    """
    _check_total(m)
    F, E = m.source, m.target
    m0, m1 = m.vertex_map, m.edge_map
    bad = []
    for e in F.edges:
        image = E.edge(m1[e.id])
        if image.dst != m0[e.dst]:
            bad.append(Violation("i", e.id, f"r(m(e))={image.dst} but m(r(e))={m0[e.dst]}"))
        if image.src != m0[e.src]:
            bad.append(Violation("i", e.id, f"s(m(e))={image.src} but m(s(e))={m0[e.src]}"))
    lifts: dict[tuple[str, str], list[str]] = {}
    for e in F.edges:
        lifts.setdefault((m1[e.id], e.src), []).append(e.id)
    for v in F.vertices:
        for target_edge in E.out_edges(m0[v]):
            found = lifts.get((target_edge.id, v), [])
            if len(found) != 1:
                bad.append(
                    Violation("ii", f"{target_edge.id}@{v}", f"{len(found)} lifts with source {v}: {sorted(found)}")
                )
    irregular = []
    for v in F.vertices:
        if E.in_edges(m0[v]) and not F.in_edges(v):
            irregular.append(Violation("iii", v, f"no edge ends at {v} but edges end at {m0[v]}"))
    return FactorMapReport(tuple(bad), tuple(irregular))


@dataclass(frozen=True)
class CanonicalMap:
    """A canonical factor map bundled with the derived graphs it connects."""

    map: FactorMap
    upper: DerivedGraph = field(repr=False)
    lower: DerivedGraph = field(repr=False)


def canonical_m(g: DirectedMultigraph, n: int, k: int, guard: int = DEFAULT_PATH_GUARD) -> CanonicalMap:
    """m: E(nk) -> E(n), with m0(w) = w(n) and m1(e, w) = (e, w(n))."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    upper = build_E_n(g, n * k, guard=guard)
    lower = build_E_n(g, n, guard=guard)
    vmap = {vid: remainder_head(w, n).name for vid, w in upper.vertex_paths.items()}
    emap = {}
    for eid, (e, w) in upper.edge_pairs.items():
        emap[eid] = pair_label(e, remainder_head(w, n).name)
    return CanonicalMap(FactorMap(upper.graph, lower.graph, vmap, emap), upper, lower)


def canonical_q(g: DirectedMultigraph, n: int, k: int, guard: int = DEFAULT_PATH_GUARD) -> CanonicalMap:
    """q: E[nk] -> E[n]; agrees with m on E(nk) and fixes c(v) and (e, c(v))."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    upper = build_E_bracket_n(g, n * k, guard=guard)
    lower = build_E_bracket_n(g, n, guard=guard)
    vmap = {vid: remainder_head(w, n).name for vid, w in upper.vertex_paths.items()}
    for v in g.vertices:
        vmap[c_label(v)] = c_label(v)
    emap = {}
    for eid, (e, w) in upper.edge_pairs.items():
        if isinstance(w, str):
            emap[eid] = eid
        else:
            emap[eid] = pair_label(e, remainder_head(w, n).name)
    return CanonicalMap(FactorMap(upper.graph, lower.graph, vmap, emap), upper, lower)


def identity_map(g: DirectedMultigraph) -> FactorMap:
    return FactorMap(g, g, {v: v for v in g.vertices}, {e.id: e.id for e in g.edges})


def compose(m2: FactorMap, m1: FactorMap) -> FactorMap:
    """m2 after m1."""
    if m1.target != m2.source:
        raise GraphStructureError("cannot compose: target of the inner map is not the source of the outer map")
    return FactorMap(
        m1.source,
        m2.target,
        {v: m2.vertex_map[x] for v, x in m1.vertex_map.items()},
        {e: m2.edge_map[f] for e, f in m1.edge_map.items()},
    )


@dataclass(frozen=True)
class GeneratorMap:
    """Formal images P_v -> sum of P_u over u in m0^{-1}(v), S_e -> sum of S_f over m1^{-1}(e)."""

    projections: Mapping[str, tuple[str, ...]]
    partial_isometries: Mapping[str, tuple[str, ...]]
    injective: bool

    def to_mapping(self) -> dict:
        return {
            "injective": self.injective,
            "projections": {k: list(self.projections[k]) for k in sorted(self.projections)},
            "partial_isometries": {k: list(self.partial_isometries[k]) for k in sorted(self.partial_isometries)},
        }


def induced_generator_map(m: FactorMap) -> GeneratorMap:
    report = verify_factor_map(m)
    if not report.is_regular:
        raise PreconditionError(f"not a regular factor map: {[v.to_mapping() for v in report.violations + report.regularity_violations]}")
    proj = {v: [] for v in m.target.vertices}
    for u in m.source.vertices:
        proj[m.vertex_map[u]].append(u)
    shifts = {e.id: [] for e in m.target.edges}
    for f in m.source.edges:
        shifts[m.edge_map[f.id]].append(f.id)
    return GeneratorMap(
        {k: tuple(sorted(v)) for k, v in proj.items()},
        {k: tuple(sorted(v)) for k, v in shifts.items()},
        injective=all(proj.values()),
    )
