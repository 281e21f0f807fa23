"""Exact operator checks on truncated Fock spaces.

The Fock space of a graph has an orthonormal basis indexed by finite paths.
Truncating at depth N keeps the paths of length at most N; creation
operators ``L_e`` then send the top layer to zero. Some identities only hold
away from that boundary, and those are checked after compressing to paths
of length at most N - 1. Everything is exact: matrices are sparse
``DomainMatrix`` objects over QQ, QQ(i) or a cyclotomic field.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import sympy
from sympy import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from .derived import build_E_eq_n, build_E_n, pair_label
from .errors import GuardError, InputError, PreconditionError
from .graph import DirectedMultigraph, Path, enumerate_paths, remainder_head

DEFAULT_DIM_GUARD = 3000


class TruncatedFockSpace:
    """Span of the basis vectors xi_w for paths w with |w| <= depth."""

    def __init__(self, graph: DirectedMultigraph, depth: int, guard: int = DEFAULT_DIM_GUARD):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.graph = graph
        self.depth = depth
        try:
            self.basis: list[Path] = enumerate_paths(graph, depth + 1, mode="below", guard=guard)
        except GuardError as exc:
            raise GuardError("Fock space dimension", exc.size, guard) from None
        self.index = {p: i for i, p in enumerate(self.basis)}
        self.by_name = {p.name: i for i, p in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def indices(self, max_len: int | None = None) -> list[int]:
        if max_len is None:
            return list(range(self.dim))
        return [i for i, p in enumerate(self.basis) if len(p) <= max_len]

    def operator(self, entries: Mapping[tuple[int, int], object], domain=QQ) -> "FockOperator":
        rows: dict[int, dict[int, object]] = {}
        for (i, j), v in entries.items():
            if v:
                rows.setdefault(i, {})[j] = v
        return FockOperator(self, DomainMatrix(rows, (self.dim, self.dim), domain))

    def diagonal(self, values: Mapping[int, object], domain=QQ) -> "FockOperator":
        return self.operator({(i, i): v for i, v in values.items()}, domain)

    def zero(self, domain=QQ) -> "FockOperator":
        return self.operator({}, domain)

    def identity(self, domain=QQ) -> "FockOperator":
        return self.diagonal({i: domain.one for i in range(self.dim)}, domain)


def _conj(K, x):
    if K.is_QQ or K.is_ZZ:
        return x
    if K == QQ_I:
        return K(x.x, -x.y)
    return K.from_sympy(sympy.conjugate(K.to_sympy(x)))


@dataclass(frozen=True)
class FockOperator:
    space: TruncatedFockSpace = field(repr=False)
    matrix: DomainMatrix

    @property
    def domain(self):
        return self.matrix.domain

    def _pair(self, other: "FockOperator"):
        if other.space is not self.space:
            raise ValueError("operators live on different spaces")
        a, b = self.matrix.unify(other.matrix)
        return a, b

    def __add__(self, other):
        a, b = self._pair(other)
        return FockOperator(self.space, a + b)

    def __sub__(self, other):
        a, b = self._pair(other)
        return FockOperator(self.space, a - b)

    def __matmul__(self, other):
        a, b = self._pair(other)
        return FockOperator(self.space, a * b)

    def scale(self, c, domain=None) -> "FockOperator":
        K = domain or self.domain
        m = self.matrix.convert_to(K)
        rows = {i: {j: v * c for j, v in r.items()} for i, r in m.to_sdm().items()}
        return FockOperator(self.space, DomainMatrix(rows, m.shape, K))

    def adjoint(self) -> "FockOperator":
        K = self.domain
        t = self.matrix.transpose().to_sdm()
        rows = {i: {j: _conj(K, v) for j, v in r.items()} for i, r in t.items()}
        return FockOperator(self.space, DomainMatrix(rows, self.matrix.shape, K))

    def entries(self) -> dict[tuple[int, int], object]:
        return {(i, j): v for i, r in self.matrix.to_sdm().items() for j, v in r.items() if v}

    def entry(self, i: int, j: int):
        return self.matrix.to_sdm().get(i, {}).get(j, self.domain.zero)

    def compress(self, max_len: int) -> "FockOperator":
        keep = set(self.space.indices(max_len))
        rows = {
            i: {j: v for j, v in r.items() if j in keep}
            for i, r in self.matrix.to_sdm().items()
            if i in keep
        }
        return FockOperator(self.space, DomainMatrix(rows, self.matrix.shape, self.domain))

    def is_zero(self) -> bool:
        return not self.entries()

    def witness(self) -> str | None:
        """Name of the first basis vector on which the operator is nonzero."""
        cols = sorted({j for (_, j) in self.entries()})
        return self.space.basis[cols[0]].name if cols else None

    def __eq__(self, other):
        if not isinstance(other, FockOperator):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None


@dataclass(frozen=True)
class RelationResult:
    relation: str
    item: str
    holds: bool
    witness: str | None = None

    def to_mapping(self) -> dict:
        return {"relation": self.relation, "item": self.item, "holds": self.holds, "witness": self.witness}


def _difference(relation: str, item: str, lhs: FockOperator, rhs: FockOperator) -> RelationResult:
    diff = lhs - rhs
    return RelationResult(relation, item, diff.is_zero(), diff.witness())


def creation(space: TruncatedFockSpace, e: str) -> FockOperator:
    """L_e xi_w = xi_{ew} when s(e) = r(w) and |w| < N; zero otherwise."""
    g = space.graph
    edge = space.graph.edge(e)
    step = g.edge_path(e)
    entries = {}
    for j, w in enumerate(space.basis):
        if w.range == edge.src and len(w) < space.depth:
            entries[(space.index[step * w], j)] = QQ.one
    return space.operator(entries)


def vertex_projection(space: TruncatedFockSpace, x: str) -> FockOperator:
    """Projection onto the span of xi_w with r(w) = x."""
    return space.diagonal({i: QQ.one for i, w in enumerate(space.basis) if w.range == x})


def source_projection(space: TruncatedFockSpace, x: str) -> FockOperator:
    """Projection onto the span of xi_w with s(w) = x."""
    return space.diagonal({i: QQ.one for i, w in enumerate(space.basis) if w.source == x})


def vacuum_projection(space: TruncatedFockSpace, x: str) -> FockOperator:
    """Rank-one projection onto xi_x."""
    return space.diagonal({space.index[Path.trivial(x)]: QQ.one})


@dataclass
class FockGenerators:
    """Creation operators L_e, vertex projections P_x, right projections R_x,
    and the vacuum projections computed as P_x (I - sum_e L_e L_e^*)."""

    L: dict[str, FockOperator]
    P: dict[str, FockOperator]
    R: dict[str, FockOperator]
    vacuum: dict[str, FockOperator]


def build_generators(space: TruncatedFockSpace) -> FockGenerators:
    g = space.graph
    L = {e.id: creation(space, e.id) for e in g.edges}
    P = {v: vertex_projection(space, v) for v in g.vertices}
    R = {v: source_projection(space, v) for v in g.vertices}
    defect = space.identity()
    for op in L.values():
        defect = defect - op @ op.adjoint()
    vacuum = {v: P[v] @ defect for v in g.vertices}
    return FockGenerators(L, P, R, vacuum)


def check_generators(space: TruncatedFockSpace, gens: FockGenerators) -> list[RelationResult]:
    """Sum of the P_x is I, and the computed vacuum projections are the rank-one units."""
    out = []
    total = space.zero()
    for op in gens.P.values():
        total = total + op
    out.append(_difference("unit", "sum P_x", total, space.identity()))
    for v in sorted(gens.vacuum):
        out.append(_difference("vacuum", v, gens.vacuum[v], vacuum_projection(space, v)))
    defect = total
    for op in gens.L.values():
        defect = defect - op @ op.adjoint()
    vac = space.zero()
    for v in gens.vacuum:
        vac = vac + vacuum_projection(space, v)
    out.append(_difference("defect", "sum P_x - sum L_e L_e^*", defect, vac))
    return out


def _real_part(K, x):
    """x as a real number, or None when x is not real."""
    if K.is_QQ:
        return x
    if K == QQ_I:
        return None if x.y else x.x
    z = K.to_sympy(x)
    return z if z.is_real else None


def is_positive_semidefinite(op: FockOperator) -> tuple[bool, str | None]:
    """Exact symmetric elimination on a self-adjoint operator.

    A zero pivot with a nonzero remaining row, or a negative pivot, refutes
    positivity; the witness is the basis vector where elimination stopped.
    """
    if op != op.adjoint():
        return False, op.space.basis[0].name if op.space.dim else None
    K = op.domain
    rows = {i: dict(r) for i, r in op.matrix.to_sdm().items()}
    for p in sorted(rows):
        row = rows.get(p, {})
        piv = row.get(p, K.zero)
        piv_real = _real_part(K, piv)
        if piv_real is None:
            return False, op.space.basis[p].name
        others = {j: v for j, v in row.items() if j > p and v}
        if piv_real < 0:
            return False, op.space.basis[p].name
        if piv_real == 0:
            if others:
                return False, op.space.basis[p].name
            continue
        for i, a_ip in ((i, _conj(K, v)) for i, v in others.items()):
            ri = rows.setdefault(i, {})
            factor = a_ip / piv
            for j, v in others.items():
                new = ri.get(j, K.zero) - factor * v
                if new:
                    ri[j] = new
                else:
                    ri.pop(j, None)
    return True, None


def verify_tck(
    space: TruncatedFockSpace,
    S: Mapping[str, FockOperator],
    P: Mapping[str, FockOperator],
    compressed: bool = True,
):
    """Check the four Toeplitz-Cuntz-Krieger relations for a family on ``space``.

    With ``compressed`` the isometry relation S_e^* S_e = P_{s(e)} is compared
    on paths of length at most N - 1; the other relations are exact.
    """
    g = space.graph
    out: list[RelationResult] = []
    verts = sorted(P)
    for x in verts:
        p = P[x]
        ok = p == p.adjoint() and p @ p == p
        out.append(RelationResult("projection", x, ok, None if ok else (p @ p - p).witness()))
    for a in range(len(verts)):
        for b in range(a + 1, len(verts)):
            x, y = verts[a], verts[b]
            prod = P[x] @ P[y]
            out.append(RelationResult("orthogonal", f"{x},{y}", prod.is_zero(), prod.witness()))
    edges = sorted(S)
    for e in edges:
        for f in edges:
            if e != f:
                prod = S[e].adjoint() @ S[f]
                out.append(RelationResult("range-orthogonal", f"{e},{f}", prod.is_zero(), prod.witness()))
    top = space.depth - 1 if compressed else space.depth
    for e in edges:
        lhs = (S[e].adjoint() @ S[e]).compress(top)
        rhs = P[g.s(e)].compress(top)
        out.append(_difference("isometry", e, lhs, rhs))
    for x in verts:
        acc = P[x]
        for e in g.in_edges(x):
            acc = acc - S[e.id] @ S[e.id].adjoint()
        ok, wit = is_positive_semidefinite(acc)
        out.append(RelationResult("domination", x, ok, wit))
    return out


WeightSource = Mapping[str, object] | Callable[[Path], object]


def _domain_for(values) -> object:
    exprs = [sympy.nsimplify(v) if isinstance(v, float) else sympy.sympify(v) for v in values]
    for z in exprs:
        if not (z.is_rational or (sympy.re(z).is_rational and sympy.im(z).is_rational)):
            raise InputError(f"weight {z} is not a (Gaussian) rational")
    if all(z.is_real for z in exprs):
        return QQ, exprs
    return QQ_I, exprs


def weighted_shift(space: TruncatedFockSpace, e: str, weights: WeightSource) -> FockOperator:
    """T_e xi_w = lambda(ew) xi_{ew}; ``weights`` maps path names (or paths) to numbers."""
    g = space.graph
    edge = g.edge(e)
    step = g.edge_path(e)
    cells, values = [], []
    for j, w in enumerate(space.basis):
        if w.range == edge.src and len(w) < space.depth:
            ew = step * w
            if callable(weights):
                val = weights(ew)
            elif ew.name in weights:
                val = weights[ew.name]
            else:
                raise InputError(f"no weight given for path {ew.name}")
            cells.append((space.index[ew], j))
            values.append(val)
    K, exprs = _domain_for(values) if values else (QQ, [])
    return space.operator({c: K.from_sympy(z) for c, z in zip(cells, exprs)}, K)


def polar_factor(space: TruncatedFockSpace, T: FockOperator, e: str) -> tuple[FockOperator, FockOperator]:
    """Split a weighted shift along e as T = L_e W with W diagonal."""
    L = creation(space, e)
    step = space.graph.edge_path(e)
    diag = {}
    for (i, j), v in T.entries().items():
        w = space.basis[j]
        if w.range != step.source or space.basis[i] != step * w:
            raise PreconditionError(f"operator is not a weighted shift along {e}: entry at ({space.basis[i].name}, {w.name})")
        diag[j] = v
    W = space.diagonal(diag, T.domain)
    if L @ W != T:
        raise PreconditionError(f"operator is not a weighted shift along {e}")
    return L, W


def _rational_abs(K, x):
    if K.is_QQ:
        return abs(x)
    sq = sympy.Rational(K.to_sympy(x * _conj(K, x)))
    root = sympy.sqrt(sq)
    if not root.is_rational:
        raise PreconditionError(f"weight modulus sqrt({sq}) is irrational; cannot conjugate exactly")
    return K.from_sympy(root)


@dataclass(frozen=True)
class ModulusConjugation:
    unitary: FockOperator
    shifts: Mapping[str, FockOperator]

    def nonnegative(self) -> bool:
        for T in self.shifts.values():
            for v in T.entries().values():
                z = T.domain.to_sympy(v)
                if not (z.is_real and z >= 0):
                    return False
        return True


def modulus_conjugation(space: TruncatedFockSpace, shifts: Mapping[str, FockOperator]) -> ModulusConjugation:
    """A diagonal unitary U with U T_e U^* = |T_e| entrywise for all e at once."""
    K = QQ
    for T in shifts.values():
        if T.domain != QQ:
            K = T.domain
    table = {e: T.matrix.convert_to(K).to_sdm() for e, T in shifts.items()}
    mu = {}
    for w in space.basis:
        j = space.index[w]
        if w.is_trivial:
            mu[j] = K.one
            continue
        e = w.edges[-1]
        rest = w.segment(0, len(w) - 1)
        k = space.index[rest]
        lam = table[e].get(j, {}).get(k, K.zero) if e in table else K.zero
        if not lam:
            mu[j] = mu[k]
            continue
        mu[j] = mu[k] * _conj(K, lam) / _rational_abs(K, lam)
    U = space.diagonal(mu, K)
    Ustar = U.adjoint()
    conj = {e: U @ T @ Ustar for e, T in shifts.items()}
    return ModulusConjugation(U, conj)


class PeriodicWeightFunction:
    """Weights lambda on nonvertex paths determined by paths of length 1..n.

    A longer path u = e w' is given the weight of e w'(n), the edge e
    followed by the remainder of w' at level n.
    """

    def __init__(self, graph: DirectedMultigraph, n: int, table: Mapping[str, object]):
        if n < 1:
            raise ValueError("period must be >= 1")
        self.graph = graph
        self.n = n
        needed = {p.name for p in enumerate_paths(graph, n + 1, mode="below") if not p.is_trivial}
        missing = needed - set(table)
        extra = set(table) - needed
        if missing:
            raise InputError(f"periodic weight table misses {sorted(missing)[:5]}")
        if extra:
            raise InputError(f"periodic weight table has unknown paths {sorted(extra)[:5]}")
        self.table = dict(table)

    @classmethod
    def from_callable(cls, graph: DirectedMultigraph, n: int, f: Callable[[Path], object]):
        paths = [p for p in enumerate_paths(graph, n + 1, mode="below") if not p.is_trivial]
        return cls(graph, n, {p.name: f(p) for p in paths})

    def key(self, u: Path) -> Path:
        if u.is_trivial:
            raise InputError("weights are defined on nonvertex paths only")
        return u.head(1 + (len(u) - 1) % self.n)

    def __call__(self, u: Path):
        return self.table[self.key(u).name]


@dataclass
class PeriodicFamily:
    space: TruncatedFockSpace
    n: int
    T: dict[str, FockOperator]
    Q: dict[str, FockOperator]
    derived: object = field(repr=False)


def periodic_generators(space: TruncatedFockSpace, n: int) -> PeriodicFamily:
    """T_{(e,w)} xi_{w'} = xi_{ew'} when w'(n) = w; Q_w projects onto w'(n) = w."""
    g = space.graph
    if space.depth < n:
        warnings.warn(f"truncation depth {space.depth} is below the period {n}", stacklevel=2)
    derived = build_E_n(g, n)
    heads = [remainder_head(p, n).name for p in space.basis]
    Q = {}
    for wname in derived.vertex_paths:
        Q[wname] = space.diagonal({i: QQ.one for i, h in enumerate(heads) if h == wname})
    T = {}
    for eid, (e, w) in derived.edge_pairs.items():
        step = g.edge_path(e)
        entries = {}
        for j, wp in enumerate(space.basis):
            if heads[j] == w.name and wp.range == step.source and len(wp) < space.depth:
                entries[(space.index[step * wp], j)] = QQ.one
        T[eid] = space.operator(entries)
    return PeriodicFamily(space, n, T, Q, derived)


def check_periodic_family(fam: PeriodicFamily) -> list[RelationResult]:
    """Isometry (compressed), range orthogonality, and the exact range-sum identities."""
    space, dg = fam.space, fam.derived
    out = []
    top = space.depth - 1
    for eid in sorted(fam.T):
        T = fam.T[eid]
        src = dg.graph.edge(eid).src
        out.append(_difference("isometry", eid, (T.adjoint() @ T).compress(top), fam.Q[src].compress(top)))
    ids = sorted(fam.T)
    for a in ids:
        for b in ids:
            if a != b:
                prod = fam.T[a].adjoint() @ fam.T[b]
                out.append(RelationResult("range-orthogonal", f"{a},{b}", prod.is_zero(), prod.witness()))
    for wname, w in sorted(dg.vertex_paths.items()):
        incoming = dg.graph.in_edges(wname)
        acc = space.zero()
        for edge in incoming:
            acc = acc + fam.T[edge.id] @ fam.T[edge.id].adjoint()
        expected = fam.Q[wname]
        if w.is_trivial:
            expected = expected - vacuum_projection(space, w.source)
        else:
            out.append(RelationResult("single-range", wname, len(incoming) == 1, None if len(incoming) == 1 else wname))
        out.append(_difference("range-sum", wname, acc, expected))
    return out


def q_rank(space: TruncatedFockSpace, n: int, w: str) -> int:
    return sum(1 for p in space.basis if remainder_head(p, n).name == w)


@dataclass(frozen=True)
class Decomposition:
    coefficients: Mapping[str, object]
    holds: bool
    witness: str | None


def decompose_T_e(space: TruncatedFockSpace, e: str, weights: PeriodicWeightFunction) -> Decomposition:
    """Write T_e = sum_w lambda(ew) T_{(e,w)} over the E(n) edges (e, w)."""
    fam = periodic_generators(space, weights.n)
    T = weighted_shift(space, e, weights)
    acc = space.zero(T.domain)
    coeffs = {}
    step = space.graph.edge_path(e)
    for eid, (f, w) in sorted(fam.derived.edge_pairs.items()):
        if f != e:
            continue
        lam = weights(step * w)
        coeffs[eid] = lam
        K, (z,) = _domain_for([lam])
        acc = acc + fam.T[eid].scale(K.from_sympy(z), K)
    diff = T - acc
    return Decomposition(coeffs, diff.is_zero(), diff.witness())


def root_of_unity(k: int, m: int):
    """(domain, z, z^{-1}) for z = exp(2 pi i k / m), exact."""
    if m < 1:
        raise ValueError("order must be >= 1")
    k %= m
    if 4 % m == 0:
        K = QQ_I
        quarter = {0: K(1, 0), 1: K(0, 1), 2: K(-1, 0), 3: K(0, -1)}
        z = quarter[(k * 4 // m) % 4]
        return K, z, quarter[(-(k * 4 // m)) % 4]
    zeta = sympy.exp(2 * sympy.pi * sympy.I / m)
    K = QQ.algebraic_field(zeta)
    z = K.from_sympy(zeta**k)
    return K, z, K.from_sympy(zeta ** ((m - k) % m))


def gauge_unitary(space: TruncatedFockSpace, K, z, zinv=None) -> tuple[FockOperator, FockOperator]:
    """U_z xi_w = z^{|w|} xi_w and its adjoint U_{z^{-1}}."""
    zinv = zinv if zinv is not None else K.one / z
    U = space.diagonal({i: z ** len(p) for i, p in enumerate(space.basis)}, K)
    Ustar = space.diagonal({i: zinv ** len(p) for i, p in enumerate(space.basis)}, K)
    return U, Ustar


def gauge_check(space: TruncatedFockSpace, k: int, m: int, n: int | None = None) -> list[RelationResult]:
    """U_z X U_z^* = z X for every creation operator and, given n, every T_{(e,w)}."""
    K, z, zinv = root_of_unity(k, m)
    U, Ustar = gauge_unitary(space, K, z, zinv)
    ops = {e.id: creation(space, e.id) for e in space.graph.edges}
    if n is not None:
        ops.update(periodic_generators(space, n).T)
    out = []
    for name in sorted(ops):
        X = ops[name]
        out.append(_difference("gauge", f"{name}@{k}/{m}", U @ X @ Ustar, X.scale(z, K)))
    return out


def _eq_n_path(target_graph: DirectedMultigraph, v: Path, n: int) -> Path:
    """The E(=n) path made of the length-n segments of v, in walk order."""
    if len(v) % n:
        raise PreconditionError("path length is not a multiple of the period")
    if v.is_trivial:
        return Path.trivial(v.source)
    segs = [v.segment(i, i + n) for i in range(0, len(v), n)]
    ids = [pair_label(s.name, s.source) for s in segs]
    return target_graph.path(ids)


@dataclass(frozen=True)
class BlockCheck:
    w: str
    w_target: str
    edge: str
    case: str
    holds: bool

    def to_mapping(self) -> dict:
        return {"w": self.w, "w_target": self.w_target, "edge": self.edge, "case": self.case, "holds": self.holds}


@dataclass(frozen=True)
class BlockReport:
    """Block structure of the periodic generators under the unitary onto
    copies of the E(=n) Fock space, one copy per vertex of E(n)."""

    n: int
    source_depth: int
    target_depth: int
    partial_isometries_ok: bool
    blocks: tuple[BlockCheck, ...]
    block_count: int
    multiplicities: Mapping[str, int]

    @property
    def holds(self) -> bool:
        return self.partial_isometries_ok and all(b.holds for b in self.blocks)

    def to_mapping(self) -> dict:
        return {
            "n": self.n,
            "source_depth": self.source_depth,
            "target_depth": self.target_depth,
            "partial_isometries_ok": self.partial_isometries_ok,
            "holds": self.holds,
            "failures": [b.to_mapping() for b in self.blocks if not b.holds],
            "checked": len(self.blocks),
            "block_count": self.block_count,
            "multiplicities": dict(sorted(self.multiplicities.items())),
        }


def _dm_zero(m: DomainMatrix) -> bool:
    return not any(v for r in m.to_sdm().values() for v in r.values())


def _rect(rows: int, cols: int, entries: Mapping[tuple[int, int], object], K=QQ) -> DomainMatrix:
    d: dict[int, dict[int, object]] = {}
    for (i, j), v in entries.items():
        if v:
            d.setdefault(i, {})[j] = v
    return DomainMatrix(d, (rows, cols), K)


def block_decomposition(g: DirectedMultigraph, n: int, depth: int, guard: int = DEFAULT_DIM_GUARD) -> BlockReport:
    """Check U_{w'} T_{(e,v)} U_w^* block by block.

    U_w sends xi_{w u} (u of length a multiple of n) to xi of the E(=n) path
    made from u, so U_w U_w^* is the target projection P_{s(w)}. The target
    is truncated at depth floor((N - n + 1) / n) so that every block is exact
    on both truncations.
    """
    M = (depth - n + 1) // n
    if M < 1:
        raise PreconditionError(f"depth {depth} is too small for period {n}; need depth >= 2n - 1")
    source = TruncatedFockSpace(g, depth, guard)
    eqn = build_E_eq_n(g, n)
    target = TruncatedFockSpace(eqn.graph, M, guard)
    fam = periodic_generators(source, n)
    dg = fam.derived

    U = {}
    for wname, w in dg.vertex_paths.items():
        entries = {}
        for j, p in enumerate(source.basis):
            if remainder_head(p, n).name != wname:
                continue
            rest = p.segment(0, len(p) - len(w))
            if len(rest) // n > M:
                continue
            entries[(target.index[_eq_n_path(eqn.graph, rest, n)], j)] = QQ.one
        U[wname] = _rect(target.dim, source.dim, entries)

    # U_w reaches exactly the target paths ending at s(w)
    ok = True
    for wname, Uw in U.items():
        proj = vertex_projection(target, dg.vertex_paths[wname].source).matrix
        if not _dm_zero(Uw * Uw.transpose() - proj):
            ok = False

    vertex_proj = {x: vertex_projection(target, x).matrix for x in eqn.graph.vertices}
    creators = {eid: creation(target, eid).matrix for eid in (e.id for e in eqn.graph.edges)}
    zero = target.zero().matrix
    checks = []
    for eid, (e, v) in sorted(dg.edge_pairs.items()):
        T = fam.T[eid].matrix
        dst = dg.graph.edge(eid).dst
        step = g.edge_path(e)
        if len(v) < n - 1:
            case, expected = "inner", vertex_proj[v.source]
        else:
            case = "wrap"
            expected = creators[pair_label((step * v).name, v.source)]
        for w in sorted(U):
            for w2 in sorted(U):
                block = U[w2] * T * U[w].transpose()
                want = expected if (w == v.name and w2 == dst) else zero
                checks.append(BlockCheck(w, w2, eid, case if want is expected else "zero", _dm_zero(block - want)))
    mult = {x: 0 for x in g.vertices}
    for w in dg.vertex_paths.values():
        mult[w.source] += 1
    return BlockReport(n, depth, M, ok, tuple(checks), len(U), mult)


def pullback_consistency(g: DirectedMultigraph, n: int, k: int, depth: int, guard: int = DEFAULT_DIM_GUARD):
    """T_{(e,w)} at period n equals the sum of T_{(e,w')} at period nk over w'(n) = w."""
    from .factor import canonical_m, induced_generator_map

    space = TruncatedFockSpace(g, depth, guard)
    low = periodic_generators(space, n)
    high = periodic_generators(space, n * k)
    gen = induced_generator_map(canonical_m(g, n, k).map)
    out = []
    for eid, preimages in sorted(gen.partial_isometries.items()):
        acc = space.zero()
        for f in preimages:
            acc = acc + high.T[f]
        out.append(_difference("pullback", eid, low.T[eid], acc))
    for wname, preimages in sorted(gen.projections.items()):
        acc = space.zero()
        for u in preimages:
            acc = acc + high.Q[u]
        out.append(_difference("pullback", wname, low.Q[wname], acc))
    return out
