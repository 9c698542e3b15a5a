"""Banded (finite-propagation) operators between the l2-spaces of finite metric spaces.

An operator ``S: H_X -> H_Y`` is stored sparsely as ``{(y, x): S_yx}``.  Entries are
exact (:class:`~fractions.Fraction` or :class:`~coarsefields.exact.QI`) by default;
float mode uses Python complex numbers with a relative support threshold.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import PreconditionError, StructuralError
from .exact import QI, q
from .metric import FiniteMetricSpace, GluedMetric, compose, same_space

FLOAT_TAU = 1e-12


def _is_zero(v, mode: str, scale: float) -> bool:
    if mode == "exact":
        return not v
    return abs(v) <= FLOAT_TAU * scale


@dataclass(frozen=True)
class BandedOperator:
    domain: FiniteMetricSpace
    codomain: FiniteMetricSpace
    entries: dict = field(hash=False)
    mode: str = "exact"

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise StructuralError(f"unknown numeric mode {self.mode!r}")
        raw = dict(self.entries)
        for (y, x), v in raw.items():
            self.codomain.index(y), self.domain.index(x)
            if self.mode == "exact" and isinstance(v, (float, complex)):
                raise StructuralError("float entry in an exact operator")
        scale = max((abs(complex(v)) for v in raw.values()), default=0.0) if self.mode == "float" else 0.0
        clean = {k: v for k, v in raw.items() if not _is_zero(v, self.mode, scale)}
        object.__setattr__(self, "entries", clean)

    @classmethod
    def zero(cls, domain, codomain, mode="exact") -> "BandedOperator":
        return cls(domain, codomain, {}, mode)

    @classmethod
    def elementary(cls, domain, codomain, y, x, value=1) -> "BandedOperator":
        return cls(domain, codomain, {(y, x): Fraction(value)})

    @classmethod
    def from_dense(cls, domain, codomain, rows, mode="exact") -> "BandedOperator":
        ents = {
            (y, x): rows[i][j]
            for i, y in enumerate(codomain.points)
            for j, x in enumerate(domain.points)
        }
        return cls(domain, codomain, ents, mode)

    def to_dense(self) -> list[list]:
        zero = Fraction(0) if self.mode == "exact" else 0j
        return [[self.entries.get((y, x), zero) for x in self.domain.points] for y in self.codomain.points]

    @property
    def support(self) -> list[tuple]:
        ri, ci = self.codomain.index, self.domain.index
        return sorted(self.entries, key=lambda k: (ci(k[1]), ri(k[0])))

    def __eq__(self, other):
        if not isinstance(other, BandedOperator):
            return NotImplemented
        return (
            same_space(self.domain, other.domain)
            and same_space(self.codomain, other.codomain)
            and self.entries == other.entries
        )

    __hash__ = None

    def _check_same_shape(self, other):
        if not (same_space(self.domain, other.domain) and same_space(self.codomain, other.codomain)):
            raise StructuralError("operators act between different spaces")
        if self.mode != other.mode:
            raise StructuralError("mixed numeric modes")

    def __add__(self, other: "BandedOperator") -> "BandedOperator":
        self._check_same_shape(other)
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out[k] + v if k in out else v
        return BandedOperator(self.domain, self.codomain, out, self.mode)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "BandedOperator":
        return BandedOperator(self.domain, self.codomain, {k: c * v for k, v in self.entries.items()}, self.mode)

    def __matmul__(self, other: "BandedOperator") -> "BandedOperator":
        """Composition ``self ∘ other``."""
        if not same_space(self.domain, other.codomain):
            raise StructuralError("operator product: inner spaces differ")
        if self.mode != other.mode:
            raise StructuralError("mixed numeric modes")
        by_col: dict = {}
        for (z, y), a in self.entries.items():
            by_col.setdefault(y, []).append((z, a))
        out: dict = {}
        for (y, x), b in other.entries.items():
            for z, a in by_col.get(y, ()):
                k = (z, x)
                out[k] = out[k] + a * b if k in out else a * b
        return BandedOperator(other.domain, self.codomain, out, self.mode)

    @property
    def H(self) -> "BandedOperator":
        return BandedOperator(
            self.codomain, self.domain, {(x, y): v.conjugate() for (y, x), v in self.entries.items()}, self.mode
        )

    def column_degree(self) -> int:
        cnt: dict = {}
        for _, x in self.entries:
            cnt[x] = cnt.get(x, 0) + 1
        return max(cnt.values(), default=0)

    def row_degree(self) -> int:
        cnt: dict = {}
        for y, _ in self.entries:
            cnt[y] = cnt.get(y, 0) + 1
        return max(cnt.values(), default=0)


def distance_for(S: BandedOperator, d):
    """Distance function ``(y, x) -> d(x, y)`` matching the operator's index spaces."""
    if isinstance(d, FiniteMetricSpace):
        if same_space(S.domain, d) and same_space(S.codomain, d):
            return lambda y, x: d.d(x, y)
    elif isinstance(d, GluedMetric):
        if same_space(S.domain, d.left) and same_space(S.codomain, d.right):
            return lambda y, x: d.d(x, y)
        if same_space(S.domain, d.right) and same_space(S.codomain, d.left):
            return lambda y, x: d.d(y, x)
        for side in (d.left, d.right):
            if same_space(S.domain, side) and same_space(S.codomain, side):
                return lambda y, x, side=side: side.d(x, y)
    raise StructuralError("operator index spaces do not match the metric")


def propagation(S: BandedOperator, d) -> Fraction:
    """Largest ``d(x, y)`` over the support of ``S``; 0 for the zero operator."""
    dist = distance_for(S, d)
    return max((dist(y, x) for (y, x) in S.entries), default=Fraction(0))


def tro_triple(T: BandedOperator, S: BandedOperator, R: BandedOperator, d: GluedMetric):
    """The ternary product ``T S* R`` and its propagation.

    A nonzero ``(T S* R)_yx`` needs a path ``x -> v -> u -> y`` through the three
    supports, so the propagation is at most the sum of the three.
    """
    for op in (T, S, R):
        if not (same_space(op.domain, d.left) and same_space(op.codomain, d.right)):
            raise StructuralError("tro_triple: every factor must map H_X -> H_Y of the glue")
    product = T @ S.H @ R
    prop = propagation(product, d)
    bound = propagation(T, d) + propagation(S, d) + propagation(R, d)
    assert prop <= bound, (prop, bound)
    return product, prop


# ----------------------------------------------------------------------------
# partial translations


@dataclass(frozen=True)
class PartialTranslation:
    """Injective partial map ``U -> W`` with ``d(x, t(x)) < bound`` on ``U``."""

    mapping: tuple  # ((x, t(x)), ...)
    bound: Fraction

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(self.mapping))
        object.__setattr__(self, "bound", q(self.bound))
        targets = [z for _, z in self.mapping]
        if len(set(targets)) != len(targets):
            raise PreconditionError("partial translation is not injective")
        if len({x for x, _ in self.mapping}) != len(self.mapping):
            raise StructuralError("partial translation lists a point twice")

    def as_dict(self) -> dict:
        return dict(self.mapping)

    def displacement(self, d) -> Fraction:
        """Largest ``d(x, t(x))``; ``d`` is a glue or a single space."""
        return max((d.d(x, z) for x, z in self.mapping), default=Fraction(0))

    def holds_for(self, d) -> bool:
        return all(d.d(x, z) < self.bound for x, z in self.mapping)

    def operator(self, domain, codomain, mode="exact") -> BandedOperator:
        one = Fraction(1) if mode == "exact" else 1 + 0j
        return BandedOperator(domain, codomain, {(z, x): one for x, z in self.mapping}, mode)


@dataclass(frozen=True)
class Piece:
    coefficient: dict = field(hash=False)  # x -> value
    translation: PartialTranslation


def decompose_finite_propagation(S: BandedOperator, d, L) -> list[Piece]:
    """Write ``S = sum_i T_i f_i`` with ``f_i`` multiplication operators on ``H_X``
    and ``T_i`` partial translations of bound ``L + 1``.

    Greedy peeling: each round takes a maximal matching of the remaining support
    graph (columns in point order, each column taking its first free row). An
    edge survives a round only if a neighbouring edge was taken, so the number of
    rounds is at most ``col_degree + row_degree - 1``, itself bounded by the
    degree product.
    """
    L = q(L)
    if propagation(S, d) > L:
        raise PreconditionError(f"propagation {propagation(S, d)} exceeds L = {L}")
    ri = S.codomain.index
    remaining: dict = {}
    for y, x in S.support:
        remaining.setdefault(x, []).append(y)
    for ys in remaining.values():
        ys.sort(key=ri)
    pieces = []
    while any(remaining.values()):
        used_rows, mapping, coeff = set(), [], {}
        for x in S.domain.points:
            for y in remaining.get(x, ()):
                if y not in used_rows:
                    used_rows.add(y)
                    mapping.append((x, y))
                    coeff[x] = S.entries[(y, x)]
                    remaining[x].remove(y)
                    break
        pieces.append(Piece(coeff, PartialTranslation(mapping, L + 1)))
    assert recompose(pieces, S.domain, S.codomain, S.mode) == S
    assert len(pieces) <= S.column_degree() * S.row_degree()
    return pieces


def recompose(pieces, domain, codomain, mode="exact") -> BandedOperator:
    out: dict = {}
    for p in pieces:
        for x, z in p.translation.mapping:
            k = (z, x)
            out[k] = out[k] + p.coefficient[x] if k in out else p.coefficient[x]
    return BandedOperator(domain, codomain, out, mode)


# ----------------------------------------------------------------------------
# factorization through the middle space


@dataclass(frozen=True)
class Factorization:
    F: tuple  # operators H_X -> H_Y
    G: tuple  # operators H_Y -> H_Z
    parts: tuple  # the blocks U_i of the domain of t
    route: tuple  # ((x, y), ...): chosen midpoint per x
    max_fiber: int

    @property
    def N(self) -> int:
        return len(self.F)


def factor_through(t: PartialTranslation, d1: GluedMetric, d2: GluedMetric, d: GluedMetric | None = None):
    """Factor the operator of ``t`` (a partial translation for the product metric)
    as ``T = sum_i G_i F_i``.

    Every ``x`` is routed through the recorded minimizing midpoint ``y``, so both
    legs ``d1(x, y)`` and ``d2(y, t(x))`` are below the bound.  ``U`` is split by
    first fit into blocks on which the routing is injective; the number of blocks
    equals the largest fibre of the routing.
    """
    d = compose(d1, d2) if d is None else d
    if not (same_space(d.left, d1.left) and same_space(d.right, d2.right)):
        raise StructuralError("factor_through: product metric does not match the factors")
    if d.midpoints is None:
        raise StructuralError("factor_through: product metric lacks the midpoint table")
    C = t.bound
    X, Y, Z = d1.left, d1.right, d2.right
    for x, z in t.mapping:
        if not d.d(x, z) < C:
            raise PreconditionError(f"d({x!r}, {z!r}) = {d.d(x, z)} is not below the bound {C}")
    ordered = sorted(t.mapping, key=lambda xz: X.index(xz[0]))
    route, parts, used = [], [], []
    for x, z in ordered:
        y = Y.points[d.midpoint(x, z)]
        assert d1.d(x, y) < C and d2.d(y, z) < C
        route.append((x, y))
        for k, seen in enumerate(used):
            if y not in seen:
                break
        else:
            k = len(used)
            used.append(set())
            parts.append([])
        used[k].add(y)
        parts[k].append((x, y, z))
    fibres: dict = {}
    for _, y in route:
        fibres[y] = fibres.get(y, 0) + 1
    max_fiber = max(fibres.values(), default=0)
    F = tuple(PartialTranslation([(x, y) for x, y, _ in p], C).operator(X, Y) for p in parts)
    G = tuple(PartialTranslation([(y, z) for _, y, z in p], C).operator(Y, Z) for p in parts)
    T = t.operator(X, Z)
    total = BandedOperator.zero(X, Z)
    for f, g in zip(F, G):
        total = total + (g @ f)
    assert total == T
    assert len(F) == max_fiber
    return Factorization(F, G, tuple(tuple(x for x, _, _ in p) for p in parts), tuple(route), max_fiber)


# ----------------------------------------------------------------------------
# random instances and export


def random_entry(rng: random.Random, mode: str = "exact"):
    while True:
        re, im = rng.randint(-4, 4), rng.randint(-4, 4)
        if re or im:
            break
    if mode == "float":
        return complex(re / rng.randint(1, 3), im / rng.randint(1, 3))
    return QI(Fraction(re, rng.randint(1, 3)), Fraction(im, rng.randint(1, 3)))


def random_banded(rng: random.Random, d, L, max_fiber: int = 3, density: float = 0.6, mode: str = "exact",
                  domain=None, codomain=None) -> BandedOperator:
    """Random operator with propagation at most ``L`` and row/column fibres at most ``max_fiber``."""
    L = q(L)
    if isinstance(d, GluedMetric):
        domain = d.left if domain is None else domain
        codomain = d.right if codomain is None else codomain
    else:
        domain = codomain = d
    probe = BandedOperator.zero(domain, codomain, mode)
    dist = distance_for(probe, d)
    cols: dict = {}
    rows: dict = {}
    ents = {}
    cands = [(y, x) for x in domain.points for y in codomain.points if dist(y, x) <= L]
    rng.shuffle(cands)
    for y, x in cands:
        if rng.random() > density:
            continue
        if cols.get(x, 0) >= max_fiber or rows.get(y, 0) >= max_fiber:
            continue
        cols[x] = cols.get(x, 0) + 1
        rows[y] = rows.get(y, 0) + 1
        ents[(y, x)] = random_entry(rng, mode)
    return BandedOperator(domain, codomain, ents, mode)


def support_dot(S: BandedOperator, name: str = "support") -> str:
    """Graphviz source of the bipartite support graph (columns left, rows right)."""
    lines = [f'digraph "{name}" {{', "  rankdir=LR;"]
    for x in S.domain.points:
        lines.append(f'  "x:{x}" [shape=circle, label="{x}"];')
    for y in S.codomain.points:
        lines.append(f'  "y:{y}" [shape=box, label="{y}"];')
    for y, x in S.support:
        lines.append(f'  "x:{x}" -> "y:{y}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
