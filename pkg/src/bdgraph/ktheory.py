"""K-groups of the odometer crossed product, level by level.

At level k the functions constant on level-k cylinders form Z^{d_k}, with a
basis indexed by the paths of length below n_k. The operator
``Delta_k = I - sum_e (f -> f o sigma_e)`` acts on this lattice; its cokernel
and kernel give K_0 and K_1 at level k, and refining the level gives the
connecting maps of a direct system whose limit computes the K-groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .derived import build_E_n
from .errors import ConsistencyError
from .graph import DEFAULT_PATH_GUARD, DirectedMultigraph, DivisibilitySequence, Path, remainder_head
from .odometer import OdometerPoint, sigma
from .snf import SmithDecomposition, determinant, identity, matmul, smith_decompose


@dataclass(frozen=True)
class IntegerMatrix:
    entries: tuple[tuple[int, ...], ...]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    @classmethod
    def build(cls, rows, row_labels, col_labels) -> "IntegerMatrix":
        return cls(tuple(tuple(int(x) for x in r) for r in rows), tuple(row_labels), tuple(col_labels))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_labels), len(self.col_labels)

    def as_lists(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def dump(self) -> str:
        """Plain text: a ``rows cols`` header, then one whitespace-separated row per line."""
        m, n = self.shape
        lines = [f"{m} {n}"] + [" ".join(str(x) for x in r) for r in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "IntegerMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        m, n = (int(x) for x in lines[0].split())
        rows = [[int(x) for x in ln.split()] for ln in lines[1:1 + m]]
        if len(rows) != m or any(len(r) != n for r in rows):
            raise ValueError("matrix dump does not match its header")
        return cls.build(rows, [str(i) for i in range(m)], [str(j) for j in range(n)])

    def to_mapping(self) -> dict:
        return {"rows": list(self.row_labels), "cols": list(self.col_labels), "entries": self.as_lists()}


@dataclass(frozen=True)
class FinitelyGeneratedAbelianGroup:
    """Z^free_rank plus the cyclic groups Z/t for t in ``torsion``."""

    free_rank: int
    torsion: tuple[int, ...] = ()

    @property
    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def to_mapping(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion), "str": str(self)}

    def __str__(self):
        parts = []
        if self.free_rank:
            parts.append("Z" if self.free_rank == 1 else f"Z^{self.free_rank}")
        parts += [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"


def _level_basis(g: DirectedMultigraph, n: int, guard: int):
    derived = build_E_n(g, n, guard=guard)
    paths = sorted(derived.vertex_paths.values(), key=Path.sort_key)
    return derived, paths


def delta_matrix(
    g: DirectedMultigraph, seq: DivisibilitySequence, k: int, guard: int = DEFAULT_PATH_GUARD
) -> IntegerMatrix:
    """``Delta_k = I - A^T`` with A[w'', w'] the number of E(n_k) edges from w' to w''."""
    derived, paths = _level_basis(g, seq.term(k), guard)
    labels = [p.name for p in paths]
    index = {name: i for i, name in enumerate(labels)}
    rows = identity(len(labels))
    for e in derived.graph.edges:
        rows[index[e.src]][index[e.dst]] -= 1
    return IntegerMatrix.build(rows, labels, labels)


def z_action(
    g: DirectedMultigraph, seq: DivisibilitySequence, k: int, f: list[int], guard: int = DEFAULT_PATH_GUARD
) -> list[int]:
    """``sum_e f o sigma_e`` for f given in the level-k basis."""
    delta = delta_matrix(g, seq, k, guard)
    return [f[i] - sum(d * x for d, x in zip(row, f)) for i, row in enumerate(delta.entries)]


def delta_pointwise(f: dict, y: OdometerPoint, k: int) -> int:
    """Evaluate ``(Delta f)(y)`` directly from sigma, for f keyed by level-k path names."""
    total = f.get(y.window(k).name, 0)
    for e in y.graph.out_edges(y.range):
        total -= f.get(sigma(e.id, y).window(k).name, 0)
    return total


def inclusion_matrix(
    g: DirectedMultigraph,
    seq: DivisibilitySequence,
    k: int,
    k_next: int | None = None,
    guard: int = DEFAULT_PATH_GUARD,
) -> IntegerMatrix:
    """Level k functions viewed at a finer level: column w is the sum of chi_{w'} with w'(n_k) = w."""
    k_next = k + 1 if k_next is None else k_next
    n, n_next = seq.term(k), seq.term(k_next)
    if k_next <= k or n_next % n:
        raise ValueError("the target level must refine the source level")
    _, low = _level_basis(g, n, guard)
    _, high = _level_basis(g, n_next, guard)
    col = {p.name: j for j, p in enumerate(low)}
    rows = [[0] * len(low) for _ in high]
    for i, p in enumerate(high):
        rows[i][col[remainder_head(p, n).name]] = 1
    return IntegerMatrix.build(rows, [p.name for p in high], [p.name for p in low])


@dataclass(frozen=True)
class LevelKTheory:
    level: int
    n: int
    delta: IntegerMatrix = field(repr=False)
    snf: SmithDecomposition = field(repr=False)
    k0: FinitelyGeneratedAbelianGroup
    k1: FinitelyGeneratedAbelianGroup
    # SNF row indices presenting K0: torsion rows first, then free rows
    k0_rows: tuple[int, ...]
    k0_orders: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.delta.shape[0]

    @property
    def kernel_basis(self) -> list[list[int]]:
        """Columns of V beyond the rank, as a list of vectors."""
        V, r = self.snf.V, self.snf.rank
        return [[V[i][j] for i in range(self.dim)] for j in range(r, self.dim)]

    def to_mapping(self) -> dict:
        return {
            "level": self.level,
            "n": self.n,
            "dim": self.dim,
            "divisors": list(self.snf.divisors),
            "K0": self.k0.to_mapping(),
            "K1": self.k1.to_mapping(),
        }


def level_k_theory(
    g: DirectedMultigraph, seq: DivisibilitySequence, k: int, guard: int = DEFAULT_PATH_GUARD
) -> LevelKTheory:
    delta = delta_matrix(g, seq, k, guard)
    dec = smith_decompose(delta.as_lists())
    d = delta.shape[0]
    torsion_rows = [i for i in range(dec.rank) if dec.D[i][i] > 1]
    free_rows = list(range(dec.rank, d))
    k0 = FinitelyGeneratedAbelianGroup(len(free_rows), tuple(dec.D[i][i] for i in torsion_rows))
    k1 = FinitelyGeneratedAbelianGroup(d - dec.rank)
    orders = tuple(dec.D[i][i] for i in torsion_rows) + (0,) * len(free_rows)
    return LevelKTheory(k, seq.term(k), delta, dec, k0, k1, tuple(torsion_rows + free_rows), orders)


def connecting_k0(low: LevelKTheory, high: LevelKTheory, inclusion: IntegerMatrix) -> IntegerMatrix:
    """The induced map coker Delta_low -> coker Delta_high in SNF coordinates."""
    iota = inclusion.as_lists()
    if matmul(high.delta.as_lists(), iota) != matmul(iota, low.delta.as_lists()):
        raise ConsistencyError("inclusion does not intertwine the level operators")
    full = matmul(matmul(high.snf.U, iota), low.snf.U_inv)
    rows = []
    for i, order in zip(high.k0_rows, high.k0_orders):
        row = [full[i][j] for j in low.k0_rows]
        rows.append([x % order for x in row] if order else row)
    return IntegerMatrix.build(
        rows, [f"g{i}" for i in range(len(high.k0_rows))], [f"g{j}" for j in range(len(low.k0_rows))]
    )


def connecting_k1(low: LevelKTheory, high: LevelKTheory, inclusion: IntegerMatrix) -> IntegerMatrix:
    """The induced map ker Delta_low -> ker Delta_high in kernel-basis coordinates."""
    iota = inclusion.as_lists()
    basis = low.kernel_basis
    if not basis:
        cols = [[] for _ in range(high.dim)]
    else:
        cols = matmul(iota, [list(r) for r in zip(*basis)])
    coords = matmul(high.snf.V_inv, cols) if cols and cols[0] else [[] for _ in range(high.dim)]
    r = high.snf.rank
    if any(x for row in coords[:r] for x in row):
        raise ConsistencyError("kernel vector leaves the kernel under inclusion")
    rows = coords[r:]
    return IntegerMatrix.build(
        rows, [f"k{i}" for i in range(len(rows))], [f"k{j}" for j in range(len(basis))]
    )


def describe_limit(group: FinitelyGeneratedAbelianGroup, conn: IntegerMatrix) -> str | None:
    """A closed form for the limit of a constant system, when one is recognized."""
    if group.is_trivial:
        return "0"
    if group.torsion:
        return None
    m = conn.as_lists()
    if group.free_rank == 1:
        a = abs(m[0][0])
        if a == 0:
            return "0"
        return "Z" if a == 1 else f"Z[1/{a}]"
    if abs(determinant(m)) == 1:
        return str(group)
    r = group.free_rank
    c = abs(m[0][0])
    if c and all(m[i][j] == (m[0][0] if i == j else 0) for i in range(r) for j in range(r)):
        return f"Z[1/{c}]^{r}"
    return None


@dataclass(frozen=True)
class DirectSystemReport:
    levels: tuple[LevelKTheory, ...]
    k0_maps: tuple[IntegerMatrix, ...]
    k1_maps: tuple[IntegerMatrix, ...]
    k0_limit: str | None
    k1_limit: str | None
    stable_from: int | None

    def to_mapping(self) -> dict:
        return {
            "levels": [lvl.to_mapping() for lvl in self.levels],
            "K0_maps": [m.as_lists() for m in self.k0_maps],
            "K1_maps": [m.as_lists() for m in self.k1_maps],
            "K0_limit": self.k0_limit,
            "K1_limit": self.k1_limit,
            "stable_from": self.stable_from,
        }


def _stable_from(groups, maps) -> int | None:
    # index i such that groups[i:] and maps[i:] are constant, with at least two maps
    if len(maps) < 2:
        return None
    i = len(maps) - 1
    while i > 0 and maps[i - 1].entries == maps[-1].entries and groups[i - 1] == groups[-1]:
        i -= 1
    return i if len(maps) - i >= 2 else None


def k_groups(
    g: DirectedMultigraph, seq: DivisibilitySequence, levels, guard: int = DEFAULT_PATH_GUARD
) -> DirectSystemReport:
    levels = sorted(set(levels))
    if not levels or levels[0] < 1:
        raise ValueError("levels must be positive")
    data = [level_k_theory(g, seq, k, guard) for k in levels]
    k0_maps, k1_maps = [], []
    for low, high in zip(data, data[1:]):
        inc = inclusion_matrix(g, seq, low.level, high.level, guard)
        k0_maps.append(connecting_k0(low, high, inc))
        k1_maps.append(connecting_k1(low, high, inc))
    k0_groups = [d.k0 for d in data]
    k1_groups = [d.k1 for d in data]
    s0 = _stable_from(k0_groups, k0_maps)
    s1 = _stable_from(k1_groups, k1_maps)
    k0_limit = describe_limit(k0_groups[-1], k0_maps[-1]) if s0 is not None else None
    k1_limit = describe_limit(k1_groups[-1], k1_maps[-1]) if s1 is not None else None
    stable = None if s0 is None or s1 is None else levels[max(s0, s1)]
    return DirectSystemReport(tuple(data), tuple(k0_maps), tuple(k1_maps), k0_limit, k1_limit, stable)
