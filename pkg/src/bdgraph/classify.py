"""Supernatural numbers and the classification invariant for cycle algebras.

For the cycle C_j and a divisibility sequence (n_k), the gcds
``gcd(j, n_k)`` increase and stabilize at some ``l``. The pair
``(l, delta)``, with ``delta`` the supernatural number of ``(j n_k / l)``,
decides isomorphism, and the algebra is simple exactly when ``l == 1``.

Under ``repeat-last`` every quantity is computed exactly. Under ``strict``
only the prefix is known, so values are lower bounds and verdicts may be
``undetermined``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from sympy import factorint

from .graph import EXTEND_REPEAT_LAST, DivisibilitySequence

INF = math.inf

SIMPLE = "simple"
NOT_SIMPLE = "not simple"
ISOMORPHIC = "isomorphic"
NOT_ISOMORPHIC = "not isomorphic"
UNDETERMINED = "undetermined"


def _exp_key(x):
    return "inf" if x == INF else int(x)


@dataclass(frozen=True)
class SupernaturalNumber:
    """A formal product of prime powers with exponents in {0, 1, ..., inf}.

    ``exact`` is False when the exponents are only lower bounds, which is what
    a strict prefix can certify.
    """

    exponents: tuple[tuple[int, float], ...]
    exact: bool = True

    def __post_init__(self):
        cleaned = []
        for p, e in sorted(dict(self.exponents).items()):
            if e == 0:
                continue
            if e != INF and (e < 0 or int(e) != e):
                raise ValueError(f"bad exponent {e!r} for prime {p}")
            cleaned.append((int(p), INF if e == INF else int(e)))
        object.__setattr__(self, "exponents", tuple(cleaned))

    @classmethod
    def from_mapping(cls, doc: Mapping, exact: bool = True) -> "SupernaturalNumber":
        """Accepts ``{prime: exponent}`` with exponent an int or the string ``"inf"``."""
        exps = {}
        for p, e in doc.items():
            p = int(p)
            if sum(factorint(p).values()) != 1:
                raise ValueError(f"{p} is not a prime")
            exps[p] = INF if e in ("inf", INF) else int(e)
        return cls(tuple(exps.items()), exact)

    @classmethod
    def of_int(cls, n: int) -> "SupernaturalNumber":
        if n < 1:
            raise ValueError("supernatural numbers are built from positive integers")
        return cls(tuple(factorint(n).items()))

    def exponent(self, p: int) -> float:
        return dict(self.exponents).get(p, 0)

    def scale(self, n: int) -> "SupernaturalNumber":
        """Multiply by the positive integer ``n``."""
        exps = dict(self.exponents)
        for p, e in factorint(n).items():
            exps[p] = exps.get(p, 0) + e
        return SupernaturalNumber(tuple(exps.items()), self.exact)

    def divide(self, n: int) -> "SupernaturalNumber":
        exps = dict(self.exponents)
        for p, e in factorint(n).items():
            if exps.get(p, 0) < e:
                raise ValueError(f"{n} does not divide this supernatural number")
            exps[p] = exps[p] - e
        return SupernaturalNumber(tuple(exps.items()), self.exact)

    def to_mapping(self) -> dict:
        return {"exact": self.exact, "exponents": [[p, _exp_key(e)] for p, e in self.exponents]}

    def __str__(self):
        if not self.exponents:
            return "1"
        return "*".join(f"{p}^{_exp_key(e)}" for p, e in self.exponents)


def compare_supernatural(a: SupernaturalNumber, b: SupernaturalNumber) -> bool | None:
    """Equality, or None when lower-bound data cannot decide it."""
    if a.exact and b.exact:
        return a.exponents == b.exponents
    primes = {p for p, _ in a.exponents} | {p for p, _ in b.exponents}
    for p in primes:
        ea, eb = a.exponent(p), b.exponent(p)
        if a.exact and not b.exact and eb > ea:
            return False
        if b.exact and not a.exact and ea > eb:
            return False
    return None


def supernatural_of(source) -> SupernaturalNumber:
    """The supernatural number of a sequence, or of an explicit prime-exponent mapping.

    For a repeat-last sequence the primes of the repeated ratio get exponent
    inf and every other prime keeps its exponent in the last prefix term.
    """
    if isinstance(source, DivisibilitySequence):
        exps = dict(factorint(source.prefix[-1]))
        if source.extend == EXTEND_REPEAT_LAST:
            for p in factorint(source.last_multiplier):
                exps[p] = INF
            return SupernaturalNumber(tuple(exps.items()))
        return SupernaturalNumber(tuple(exps.items()), exact=False)
    if isinstance(source, SupernaturalNumber):
        return source
    if isinstance(source, Mapping):
        return SupernaturalNumber.from_mapping(source)
    raise TypeError(f"cannot build a supernatural number from {type(source).__name__}")


@dataclass(frozen=True)
class BDInvariant:
    """The pair (l, delta) for C_j along a sequence.

    ``gcds`` lists gcd(j, n_k) over the prefix. When ``determined`` is False,
    ``l`` is the largest gcd seen so far and ``delta`` is a lower bound.
    """

    j: int
    sequence: DivisibilitySequence = field(repr=False)
    l: int
    delta: SupernaturalNumber
    gcds: tuple[int, ...]
    determined: bool

    def to_mapping(self) -> dict:
        return {
            "j": self.j,
            "sequence": self.sequence.to_mapping(),
            "l": self.l,
            "delta": self.delta.to_mapping(),
            "delta_str": str(self.delta),
            "gcds": list(self.gcds),
            "determined": self.determined,
        }


def bd_invariant(j: int, seq: DivisibilitySequence) -> BDInvariant:
    if j < 1:
        raise ValueError("cycle length must be >= 1")
    gcds = tuple(math.gcd(j, n) for n in seq.prefix)
    if seq.extend == EXTEND_REPEAT_LAST:
        # gcd(j, n_K m^t) is monotone in t and bounded by j
        n, m = seq.prefix[-1], seq.last_multiplier
        l = math.gcd(j, n)
        while True:
            n *= m
            nxt = math.gcd(j, n)
            if nxt == l:
                break
            l = nxt
        determined = True
    else:
        l = gcds[-1]
        # once l == j no later term can raise it
        determined = l == j
    delta = supernatural_of(seq).scale(j).divide(l)
    if seq.extend != EXTEND_REPEAT_LAST:
        delta = SupernaturalNumber(delta.exponents, exact=False)
    return BDInvariant(j, seq, l, delta, gcds, determined)


@dataclass(frozen=True)
class Verdict:
    verdict: str
    witness: Mapping = field(default_factory=dict)

    def to_mapping(self) -> dict:
        return {"verdict": self.verdict, "witness": dict(self.witness)}


def bd_isomorphic(a: tuple[int, DivisibilitySequence], b: tuple[int, DivisibilitySequence]) -> Verdict:
    """Decide isomorphism of two cycle algebras from their invariants."""
    ia, ib = bd_invariant(*a), bd_invariant(*b)
    witness = {"a": ia.to_mapping(), "b": ib.to_mapping()}
    if ia.determined and ib.determined:
        if ia.l != ib.l:
            return Verdict(NOT_ISOMORPHIC, {**witness, "reason": "l differs"})
    elif ia.determined or ib.determined:
        known, partial = (ia, ib) if ia.determined else (ib, ia)
        # the unknown l lies between the largest prefix gcd and a divisor of j
        if known.l < partial.l or partial.j % known.l != 0:
            return Verdict(NOT_ISOMORPHIC, {**witness, "reason": "l differs"})
        return Verdict(UNDETERMINED, {**witness, "reason": "l not stabilized within the strict prefix"})
    else:
        return Verdict(UNDETERMINED, {**witness, "reason": "l not stabilized within the strict prefix"})
    same = compare_supernatural(ia.delta, ib.delta)
    if same is None:
        return Verdict(UNDETERMINED, {**witness, "reason": "delta only known up to the prefix"})
    if same:
        return Verdict(ISOMORPHIC, witness)
    return Verdict(NOT_ISOMORPHIC, {**witness, "reason": "delta differs"})


def bd_simple(j: int, seq: DivisibilitySequence) -> Verdict:
    """Simple iff gcd(j, n_k) == 1 for every k."""
    inv = bd_invariant(j, seq)
    witness = {"l": inv.l, "gcds": list(inv.gcds), "determined": inv.determined}
    for k, g in enumerate(inv.gcds, start=1):
        if g > 1:
            return Verdict(NOT_SIMPLE, {**witness, "level": k, "gcd": g})
    if inv.determined:
        return Verdict(SIMPLE if inv.l == 1 else NOT_SIMPLE, witness)
    return Verdict(UNDETERMINED, witness)
