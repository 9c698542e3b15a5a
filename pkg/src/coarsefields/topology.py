"""The clopen-subbase topology on posets and finite-resolution spectra of γP.

The subbase is ``U_a = {b : a <= b}`` together with ``V_a = P \\ U_a``.  Points of
γP are realized as 0/1 assignments on the generators ``chi_a`` (ultrafilters of
the generated Boolean algebra), restricted to what a finite universe and
explicitly supplied limit sequences can witness.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

from .errors import Inconclusive, PreconditionError, StructuralError


@dataclass(frozen=True)
class FinitePoset:
    elements: tuple
    leq_matrix: tuple

    def __post_init__(self):
        els = tuple(self.elements)
        n = len(els)
        if len(set(els)) != n:
            raise StructuralError("duplicate poset elements")
        rows = tuple(tuple(bool(v) for v in r) for r in self.leq_matrix)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise StructuralError("leq matrix does not match the element list")
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "leq_matrix", rows)
        object.__setattr__(self, "_index", {e: i for i, e in enumerate(els)})
        for i in range(n):
            if not rows[i][i]:
                raise StructuralError(f"not reflexive at {els[i]!r}")
            for j in range(n):
                if i != j and rows[i][j] and rows[j][i]:
                    raise StructuralError(f"not antisymmetric at {els[i]!r}, {els[j]!r}")
                for k in range(n):
                    if rows[i][j] and rows[j][k] and not rows[i][k]:
                        raise StructuralError(f"not transitive at {els[i]!r}, {els[j]!r}, {els[k]!r}")

    @classmethod
    def from_relation(cls, elements: Sequence, pairs) -> "FinitePoset":
        """Reflexive-transitive closure of the given ``(a, b)`` with ``a <= b``."""
        els = tuple(elements)
        idx = {e: i for i, e in enumerate(els)}
        n = len(els)
        R = [[i == j for j in range(n)] for i in range(n)]
        for a, b in pairs:
            R[idx[a]][idx[b]] = True
        for k in range(n):
            for i in range(n):
                if R[i][k]:
                    for j in range(n):
                        if R[k][j]:
                            R[i][j] = True
        return cls(els, R)

    @classmethod
    def chain(cls, n: int) -> "FinitePoset":
        return cls(tuple(range(n)), [[i <= j for j in range(n)] for i in range(n)])

    def __len__(self):
        return len(self.elements)

    def index(self, a) -> int:
        try:
            return self._index[a]
        except KeyError:
            raise StructuralError(f"unknown poset element {a!r}") from None

    def leq(self, a, b) -> bool:
        return self.leq_matrix[self.index(a)][self.index(b)]

    def up(self, a) -> frozenset:
        i = self.index(a)
        return frozenset(e for e, ok in zip(self.elements, self.leq_matrix[i]) if ok)

    def minimal_elements(self) -> list:
        return [b for b in self.elements if not any(a != b and self.leq(a, b) for a in self.elements)]

    def smallest(self):
        for a in self.elements:
            if all(self.leq(a, b) for b in self.elements):
                return a
        return None

    def hasse_edges(self) -> list[tuple]:
        out = []
        for a, b in itertools.permutations(self.elements, 2):
            if self.leq(a, b) and not any(
                c not in (a, b) and self.leq(a, c) and self.leq(c, b) for c in self.elements
            ):
                out.append((a, b))
        return out


# ----------------------------------------------------------------------------
# clopen sets with symbolic terms


def _eval_term(term, P: FinitePoset) -> frozenset:
    op = term[0]
    if op == "U":
        return P.up(term[1])
    if op == "V":
        return frozenset(P.elements) - P.up(term[1])
    if op == "all":
        return frozenset(P.elements)
    if op == "not":
        return frozenset(P.elements) - _eval_term(term[1], P)
    parts = [_eval_term(t, P) for t in term[1:]]
    if op == "and":
        out = frozenset(P.elements)
        for s in parts:
            out &= s
        return out
    if op == "or":
        return frozenset().union(*parts)
    raise StructuralError(f"unknown term operator {op!r}")


def term_str(term) -> str:
    op = term[0]
    if op in ("U", "V"):
        return f"{op}_{term[1]}"
    if op == "all":
        return "P"
    if op == "not":
        return f"~({term_str(term[1])})"
    sep = " & " if op == "and" else " | "
    return "(" + sep.join(term_str(t) for t in term[1:]) + ")"


@dataclass(frozen=True)
class ClopenSet:
    carrier: frozenset
    term: tuple

    @classmethod
    def of(cls, term, P: FinitePoset) -> "ClopenSet":
        return cls(_eval_term(term, P), term)

    def complement(self, P: FinitePoset) -> "ClopenSet":
        if self.term[0] == "U":
            term = ("V", self.term[1])
        elif self.term[0] == "V":
            term = ("U", self.term[1])
        else:
            term = ("not", self.term)
        return ClopenSet.of(term, P)

    def check(self, P: FinitePoset) -> bool:
        return self.carrier == _eval_term(self.term, P)

    def __contains__(self, item):
        return item in self.carrier

    def __str__(self):
        return term_str(self.term)


def subbase_sets(P: FinitePoset) -> list[ClopenSet]:
    """``U_a`` and ``V_a`` for every element, in element order."""
    out = []
    for a in P.elements:
        out.append(ClopenSet.of(("U", a), P))
        out.append(ClopenSet.of(("V", a), P))
    return out


def hausdorff_witness(P: FinitePoset, a, b) -> tuple[ClopenSet, ClopenSet]:
    """Disjoint clopen sets separating ``a`` (first) from ``b`` (second).

    If ``a <= b`` fails, ``U_a`` holds ``a`` and ``V_a`` holds ``b``; otherwise
    ``b <= a`` fails by antisymmetry and ``(V_b, U_b)`` does the job.
    """
    if a == b:
        raise StructuralError("hausdorff_witness needs two distinct elements")
    P.index(a), P.index(b)
    if not P.leq(a, b):
        pair = (ClopenSet.of(("U", a), P), ClopenSet.of(("V", a), P))
    else:
        pair = (ClopenSet.of(("V", b), P), ClopenSet.of(("U", b), P))
    assert a in pair[0] and b in pair[1] and not (pair[0].carrier & pair[1].carrier)
    return pair


def basic_neighbourhood(P: FinitePoset, a) -> frozenset:
    """Smallest finite intersection of subbase sets containing ``a``."""
    out = frozenset(P.elements)
    for s in subbase_sets(P):
        if a in s:
            out &= s.carrier
    return out


def is_open(P: FinitePoset, S) -> bool:
    S = frozenset(S)
    return all(basic_neighbourhood(P, a) <= S for a in S)


def is_closed(P: FinitePoset, F) -> bool:
    return is_open(P, frozenset(P.elements) - frozenset(F))


@dataclass(frozen=True)
class UrysohnWitness:
    W: ClopenSet
    f: dict

    def __call__(self, b) -> int:
        return self.f[b]


def urysohn_function(P: FinitePoset, F, a) -> UrysohnWitness:
    """Clopen ``W`` with ``a in W`` and ``W`` disjoint from the closed set ``F``,
    plus its indicator function.

    Start from ``U_a``; each point ``b`` of ``F`` still inside satisfies
    ``a < b`` and is cut away by ``V_c`` for a minimal ``c`` with ``c <= b`` and
    ``c`` not below ``a``.  Redundant factors are pruned afterwards.
    """
    F = frozenset(F)
    for b in F:
        P.index(b)
    if a in F:
        raise PreconditionError(f"{a!r} lies in F")
    if not is_closed(P, F):
        raise PreconditionError("F is not closed")
    factors = [("U", a)]
    current = P.up(a)
    for b in P.elements:
        if b not in F or b not in current:
            continue
        cands = [c for c in P.elements if P.leq(c, b) and not P.leq(c, a)]
        c = next(c for c in cands if not any(d != c and P.leq(d, c) for d in cands))
        factors.append(("V", c))
        current = current - P.up(c)
    # prune factors whose removal leaves the carrier unchanged
    k = 0
    while k < len(factors) and len(factors) > 1:
        trial = factors[:k] + factors[k + 1 :]
        if _eval_term(("and",) + tuple(trial), P) == current:
            factors = trial
        else:
            k += 1
    term = factors[0] if len(factors) == 1 else ("and",) + tuple(factors)
    W = ClopenSet.of(term, P)
    assert a in W and not (W.carrier & F)
    f = {b: int(b in W) for b in P.elements}
    # continuity: preimages of open sets of {0, 1} are W, its complement, P, empty
    assert is_open(P, W.carrier) and is_open(P, frozenset(P.elements) - W.carrier)
    return UrysohnWitness(W, f)


def refute_subcover(minimals: Sequence, candidate: Sequence, order: Callable | FinitePoset):
    """First minimal element not covered by ``{U_a : a in candidate}``, or ``"covered"``.

    ``U_a`` contains a minimal ``c`` iff ``a <= c``, which forces ``a == c``.
    """
    leq = order.leq if isinstance(order, FinitePoset) else order
    for c, d in itertools.permutations(minimals, 2):
        if leq(c, d):
            raise PreconditionError(f"minimals {c!r}, {d!r} are comparable")
    if isinstance(order, FinitePoset):
        mins = set(order.minimal_elements())
        for c in minimals:
            if c not in mins:
                raise PreconditionError(f"{c!r} is not minimal")
    for c in minimals:
        if not any(leq(a, c) for a in candidate):
            return c
    return "covered"


# ----------------------------------------------------------------------------
# spectrum of a finitely generated algebra


@dataclass(frozen=True)
class LimitWitness:
    """A caller-declared sequence ``term(n)`` whose generator signature stabilizes.

    The signature is read on ``n`` in ``(horizon, horizon + margin]`` and must be
    constant there.
    """

    label: str
    term: Callable[[int], Hashable] = field(compare=False)
    horizon: int
    margin: int = 16


@dataclass(frozen=True)
class GeneratedAlgebra:
    generators: tuple
    universe: tuple
    order: Callable = field(compare=False)
    limits: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "universe", tuple(self.universe))
        object.__setattr__(self, "limits", tuple(self.limits))
        missing = [g for g in self.generators if g not in self.universe]
        if missing:
            raise StructuralError(f"universe misses generators {missing!r}")

    @classmethod
    def of_poset(cls, P: FinitePoset, generators=None, limits=()) -> "GeneratedAlgebra":
        gens = P.elements if generators is None else tuple(generators)
        return cls(gens, P.elements, P.leq, limits)

    def signature(self, element) -> tuple[int, ...]:
        return tuple(int(bool(self.order(g, element))) for g in self.generators)

    @property
    def atoms(self) -> dict:
        out: dict = {}
        for u in self.universe:
            out.setdefault(self.signature(u), []).append(u)
        return out

    def fingerprint(self) -> str:
        blob = repr((self.generators, self.universe, [w.label for w in self.limits]))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SpectrumPoint:
    assignment: tuple  # ((generator, bit), ...) in generator order
    tags: tuple = field(default=(), compare=False)

    def value(self, generator) -> int:
        for g, v in self.assignment:
            if g == generator:
                return v
        raise StructuralError(f"{generator!r} is not a generator of this point")

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(v for _, v in self.assignment)

    @property
    def realized_by(self) -> list:
        return [t[1] for t in self.tags if t[0] == "realized"]

    @property
    def limit_labels(self) -> list:
        return [t[1] for t in self.tags if t[0] == "limit"]


@dataclass(frozen=True)
class Spectrum:
    points: tuple
    order: tuple  # order[i][j]: points[i] <= points[j]
    fingerprint: str

    def point_of(self, element) -> SpectrumPoint:
        for p in self.points:
            if element in p.realized_by:
                return p
        raise StructuralError(f"{element!r} realizes no point")


def limit_signature(alg: GeneratedAlgebra, w: LimitWitness) -> tuple[int, ...]:
    sigs = {n: alg.signature(w.term(n)) for n in range(w.horizon + 1, w.horizon + w.margin + 1)}
    distinct = set(sigs.values())
    if len(distinct) != 1:
        probes = [{"n": n, "signature": list(s)} for n, s in sigs.items()]
        raise Inconclusive(f"witness {w.label!r} has not stabilized after n = {w.horizon}", probes)
    return distinct.pop()


def gamma_spectrum(alg: GeneratedAlgebra) -> Spectrum:
    """Points of the spectrum visible at this resolution, with the extended order.

    A signature is admitted iff some universe element attains it or it is the
    eventual signature of a declared limit witness.  ``r <= t`` iff every
    generator equal to 1 at ``r`` is also 1 at ``t``.
    """
    tags: dict[tuple, list] = {}
    for u in alg.universe:
        tags.setdefault(alg.signature(u), []).append(("realized", u))
    for w in alg.limits:
        tags.setdefault(limit_signature(alg, w), []).append(("limit", w.label))
    sigs = sorted(tags, key=lambda s: (sum(s), [-b for b in s]))
    for s in sigs:
        for i, a in enumerate(alg.generators):
            for j, b in enumerate(alg.generators):
                if s[j] and not s[i] and alg.order(a, b):
                    raise AssertionError(f"signature {s} is not downward closed")
    points = tuple(SpectrumPoint(tuple(zip(alg.generators, s)), tuple(tags[s])) for s in sigs)
    order = tuple(
        tuple(all(t >= r for r, t in zip(p.bits, p2.bits)) for p2 in points) for p in points
    )
    return Spectrum(points, order, alg.fingerprint())


# ----------------------------------------------------------------------------
# enumeration and export


def enumerate_posets(n: int) -> list[FinitePoset]:
    """All posets on ``n`` elements up to isomorphism (labels ``0..n-1``).

    Every poset has a linear extension, so it suffices to scan strictly
    upper-triangular relations, keep the transitive ones and deduplicate by a
    canonical form (lexicographically least relabelled matrix).
    """
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    perms = list(itertools.permutations(range(n)))
    seen, out = set(), []
    for mask in range(1 << len(pairs)):
        rel = {pairs[k] for k in range(len(pairs)) if mask >> k & 1}
        if any((i, j) in rel and (j, k) in rel and (i, k) not in rel for i, j in rel for k in range(n)):
            continue
        canon = min(tuple(sorted((p[i], p[j]) for i, j in rel)) for p in perms)
        if canon in seen:
            continue
        seen.add(canon)
        out.append(FinitePoset.from_relation(range(n), rel))
    return out


def hasse_dot(P: FinitePoset, highlight: Sequence[ClopenSet] = (), name: str = "P") -> str:
    """Graphviz source of the Hasse diagram; nodes are coloured by their
    membership pattern across ``highlight``."""
    palette = ["lightblue", "lightpink", "palegreen", "khaki", "plum", "lightsalmon", "lightgrey"]
    classes: dict = {}
    lines = [f"digraph {_dot_id(name)} {{", "  rankdir=BT;"]
    for a in P.elements:
        key = tuple(a in s for s in highlight)
        colour = palette[classes.setdefault(key, len(classes)) % len(palette)]
        label = ",".join(str(s) for s in highlight if a in s)
        lines.append(
            f'  {_dot_id(a)} [label="{a}{chr(92) + "n" + label if label else ""}", style=filled, fillcolor={colour}];'
        )
    for a, b in P.hasse_edges():
        lines.append(f"  {_dot_id(a)} -> {_dot_id(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_id(x) -> str:
    s = str(x).replace('"', '\\"')
    return f'"{s}"'
