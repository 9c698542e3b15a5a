"""Fields of operators over a poset, generated by the elements ``chi_a ⊗ s``.

A field element is a finite sum of terms ``(S, s)`` standing for the function
``t -> s`` if every ``a`` in ``S`` lies below ``t`` and ``0`` otherwise, i.e. the
product of the indicators ``chi_a`` tensored with the matrix ``s``.  Products of
indicators are again such terms, so the sums are closed under the pointwise
operations needed for the bimodule identities.

Evaluation works at poset elements (through an order oracle) and at
:class:`~coarsefields.topology.SpectrumPoint` values (through their generator
assignment).  Matrices are numpy arrays; exact mode uses object arrays of
Fractions or Gaussian rationals.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import StructuralError
from .exact import QI, exact_rank, q
from .linalg import op_norm
from .topology import SpectrumPoint


def exact_matrix(rows) -> np.ndarray:
    """Object array of exact scalars (Fractions, or QI for complex entries)."""
    arr = np.array(rows, dtype=object)
    if arr.ndim != 2:
        raise StructuralError("expected a 2-d matrix")
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = v if isinstance(v, QI) else q(v)
    return out


def adj(M: np.ndarray) -> np.ndarray:
    if M.dtype == object:
        out = np.empty((M.shape[1], M.shape[0]), dtype=object)
        for (i, j), v in np.ndenumerate(M):
            out[j, i] = v.conjugate()
        return out
    return M.conj().T


def mat_equal(A: np.ndarray, B: np.ndarray) -> bool:
    return A.shape == B.shape and all(a == b for a, b in zip(A.flat, B.flat))


def zeros_like_shape(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=complex)


def in_span(generators: Sequence[np.ndarray], s: np.ndarray) -> bool:
    """Exact test of ``s ∈ span(generators)`` by comparing ranks."""
    if not generators:
        return all(not v for v in s.flat)
    rows = [list(g.flat) for g in generators]
    return exact_rank(rows + [list(s.flat)]) == exact_rank(rows)


def span_basis(generators: Sequence[np.ndarray]) -> list[np.ndarray]:
    """A maximal linearly independent subfamily, in input order."""
    basis: list = []
    for g in generators:
        if exact_rank([list(b.flat) for b in basis] + [list(g.flat)]) > len(basis):
            basis.append(g)
    return basis


# ----------------------------------------------------------------------------
# families of TROs indexed by a poset


@dataclass(frozen=True)
class TROFamily:
    """Declared generators of ``M_a`` for finitely many poset elements ``a``."""

    order: Callable = field(compare=False)
    generators: dict = field(hash=False)
    shape: tuple

    def keys(self) -> list:
        return list(self.generators)

    def span_below(self, is_below: Callable) -> list[np.ndarray]:
        gens = []
        for a, gs in self.generators.items():
            if is_below(a):
                gens.extend(gs)
        return gens

    def contains(self, a, s: np.ndarray) -> bool:
        return in_span(self.span_below(lambda b: self.order(b, a)), s)

    def compatibility_violations(self) -> list[dict]:
        """Pairs ``a <= b`` with a generator of ``M_a`` outside ``span M_b``."""
        out = []
        for a, b in itertools.permutations(self.generators, 2):
            if self.order(a, b):
                for k, g in enumerate(self.generators[a]):
                    if not in_span(self.generators[b], g):
                        out.append({"a": a, "b": b, "generator": k})
        return out

    def tro_violations(self) -> list[dict]:
        """Triples of generators whose ternary product ``x y* z`` leaves ``span M_a``."""
        out = []
        for a, gs in self.generators.items():
            for i, j, k in itertools.product(range(len(gs)), repeat=3):
                if not in_span(gs, gs[i] @ adj(gs[j]) @ gs[k]):
                    out.append({"a": a, "triple": (i, j, k)})
        return out

    def left_algebras(self) -> "TROFamily":
        """``A_u = span(M_u M_u*)``."""
        gens = {a: span_basis([x @ adj(y) for x in gs for y in gs]) for a, gs in self.generators.items()}
        return TROFamily(self.order, gens, (self.shape[0], self.shape[0]))

    def right_algebras(self) -> "TROFamily":
        """``B_u = span(M_u* M_u)``."""
        gens = {a: span_basis([adj(x) @ y for x in gs for y in gs]) for a, gs in self.generators.items()}
        return TROFamily(self.order, gens, (self.shape[1], self.shape[1]))


# ----------------------------------------------------------------------------
# field elements


@dataclass(frozen=True)
class PosetFieldElement:
    terms: tuple  # ((frozenset of elements, matrix), ...)
    shape: tuple
    exact: bool = True

    @classmethod
    def chi(cls, a, s: np.ndarray) -> "PosetFieldElement":
        """The generator ``chi_a ⊗ s``."""
        return cls(((frozenset([a]), s),), s.shape, s.dtype == object)

    @classmethod
    def constant(cls, s: np.ndarray) -> "PosetFieldElement":
        return cls(((frozenset(), s),), s.shape, s.dtype == object)

    @classmethod
    def zero(cls, shape, exact=True) -> "PosetFieldElement":
        return cls((), tuple(shape), exact)

    def __add__(self, other: "PosetFieldElement") -> "PosetFieldElement":
        if self.shape != other.shape:
            raise StructuralError("adding fields of different shapes")
        return PosetFieldElement(self.terms + other.terms, self.shape, self.exact)

    def scale(self, c) -> "PosetFieldElement":
        return PosetFieldElement(tuple((S, c * s) for S, s in self.terms), self.shape, self.exact)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __matmul__(self, other: "PosetFieldElement") -> "PosetFieldElement":
        """Pointwise product; indicator parts multiply as set unions."""
        if self.shape[1] != other.shape[0]:
            raise StructuralError("field product: inner dimensions differ")
        terms = tuple((S | T, s @ r) for (S, s), (T, r) in itertools.product(self.terms, other.terms))
        return PosetFieldElement(terms, (self.shape[0], other.shape[1]), self.exact)

    @property
    def H(self) -> "PosetFieldElement":
        return PosetFieldElement(tuple((S, adj(s)) for S, s in self.terms), self.shape[::-1], self.exact)

    def times_function(self, fn: "BoolFunction") -> "PosetFieldElement":
        """Multiply by a scalar function from the Boolean algebra of the ``chi_a``."""
        terms = tuple((S | T, c * s) for (T, c), (S, s) in itertools.product(fn.coeffs, self.terms))
        return PosetFieldElement(terms, self.shape, self.exact)

    def support_elements(self) -> set:
        return set().union(*(S for S, _ in self.terms)) if self.terms else set()


@dataclass(frozen=True)
class BoolFunction:
    """Integer combination of products of indicators ``chi_a`` (``∅`` is the unit)."""

    coeffs: tuple  # ((frozenset, int), ...)

    @classmethod
    def chi(cls, a) -> "BoolFunction":
        return cls(((frozenset([a]), 1),))

    @classmethod
    def one(cls) -> "BoolFunction":
        return cls(((frozenset(), 1),))

    def complement(self) -> "BoolFunction":
        return BoolFunction(((frozenset(), 1),) + tuple((S, -c) for S, c in self.coeffs))

    def __mul__(self, other: "BoolFunction") -> "BoolFunction":
        return BoolFunction(tuple((S | T, c * e) for (S, c), (T, e) in itertools.product(self.coeffs, other.coeffs)))

    def __add__(self, other: "BoolFunction") -> "BoolFunction":
        return BoolFunction(self.coeffs + other.coeffs)

    def __call__(self, t, order: Callable | None = None) -> int:
        return sum(c for S, c in self.coeffs if _below(S, t, order))


def _below(S, t, order) -> bool:
    if isinstance(t, SpectrumPoint):
        return all(t.value(a) == 1 for a in S)
    if order is None:
        raise StructuralError("evaluating at a poset element needs an order")
    return all(order(a, t) for a in S)


def evaluate(m: PosetFieldElement, t, order: Callable | None = None) -> np.ndarray:
    """``pi_t(m)``: the sum of the matrices of all terms whose indicators are 1 at ``t``.

    ``t`` is a poset element (``order`` required) or a spectrum point, whose
    assignment must cover every element used by ``m``.
    """
    if isinstance(t, SpectrumPoint):
        gens = {g for g, _ in t.assignment}
        missing = m.support_elements() - gens
        if missing:
            raise StructuralError(f"spectrum point has no value for {sorted(map(repr, missing))}")
    out = zeros_like_shape(m.shape, m.exact)
    for S, s in m.terms:
        if _below(S, t, order):
            out = out + s
    return out


@dataclass(frozen=True)
class FiberReport:
    point: object
    basis: tuple
    dimension: int
    norms: tuple


def fiber(family: TROFamily, t) -> FiberReport:
    """Span of ``M_a`` over the declared ``a`` lying below ``t``, with a basis."""
    if isinstance(t, SpectrumPoint):
        gens = {g for g, _ in t.assignment}
        is_below = lambda a: a in gens and t.value(a) == 1  # noqa: E731
    else:
        is_below = lambda a: family.order(a, t)  # noqa: E731
    basis = span_basis(family.span_below(is_below))
    norms = tuple(op_norm(np.array(b, dtype=complex)) for b in basis)
    return FiberReport(t, tuple(basis), len(basis), norms)


# ----------------------------------------------------------------------------
# axiom checks


def check_field_axioms(
    family: TROFamily,
    modules: Sequence[PosetFieldElement],
    left: Sequence[PosetFieldElement],
    right: Sequence[PosetFieldElement],
    points: Sequence,
    sequences: Sequence[tuple] = (),
    tail: int = 5,
) -> dict:
    """Check the bimodule-field identities on samples.

    ``left`` holds fields over ``A_u = span(M_u M_u*)``, ``right`` over
    ``B_u = span(M_u* M_u)``.  ``sequences`` holds ``(m, [t_1, t_2, ...], t)``
    for the norm-continuity check.  Failures are recorded, never raised.
    """
    order = family.order
    failures: list[dict] = []
    counts = {"eq1_left": 0, "eq1_right": 0, "eq2_left": 0, "eq2_right": 0, "surjective": 0, "continuity": 0}

    def ev(x, t):
        return evaluate(x, t, order)

    for v in family.compatibility_violations():
        failures.append({"check": "compatibility", **v})
    A_fam, B_fam = family.left_algebras(), family.right_algebras()
    for name, fam, elems in (("left-membership", A_fam, left), ("right-membership", B_fam, right)):
        for k, e in enumerate(elems):
            for S, s in e.terms:
                if len(S) == 1 and not fam.contains(next(iter(S)), s):
                    failures.append({"check": name, "element": k})
    for t in points:
        for i, m in enumerate(modules):
            pm = ev(m, t)
            for j, a in enumerate(left):
                counts["eq1_left"] += 1
                if not mat_equal(ev(a @ m, t), ev(a, t) @ pm):
                    failures.append({"check": "eq1_left", "t": t, "m": i, "a": j})
            for j, b in enumerate(right):
                counts["eq1_right"] += 1
                if not mat_equal(ev(m @ b, t), pm @ ev(b, t)):
                    failures.append({"check": "eq1_right", "t": t, "m": i, "b": j})
            for j, n in enumerate(modules):
                pn = ev(n, t)
                counts["eq2_left"] += 1
                if not mat_equal(ev(m @ n.H, t), pm @ adj(pn)):
                    failures.append({"check": "eq2_left", "t": t, "m": i, "n": j})
                counts["eq2_right"] += 1
                if not mat_equal(ev(m.H @ n, t), adj(pm) @ pn):
                    failures.append({"check": "eq2_right", "t": t, "m": i, "n": j})
    for a, gens in family.generators.items():
        for k, s in enumerate(gens):
            counts["surjective"] += 1
            if not mat_equal(ev(PosetFieldElement.chi(a, s), a), s):
                failures.append({"check": "surjective", "a": a, "generator": k})
    traces = []
    for idx, (m, seq, limit) in enumerate(sequences):
        counts["continuity"] += 1
        target = ev(m, limit)
        devs = []
        for t in seq:
            val = ev(m, t)
            devs.append(0.0 if mat_equal(val, target) else abs(_norm(val) - _norm(target)))
        tail_devs = devs[-tail:]
        monotone = all(x >= y for x, y in zip(tail_devs, tail_devs[1:]))
        traces.append({"sequence": idx, "tail": tail_devs, "limit_norm": _norm(target)})
        if not monotone:
            failures.append({"check": "continuity", "sequence": idx, "tail": tail_devs})
    return {"ok": not failures, "failures": failures, "counts": counts, "continuity": traces}


def _norm(M: np.ndarray) -> float:
    return op_norm(np.array(M, dtype=complex))


# ----------------------------------------------------------------------------
# random instances


def corner_family(order: Callable, supports: dict, shape: tuple) -> TROFamily:
    """The TROs ``p_a Mat q_a`` of matrices supported on row set ``p_a`` and column set ``q_a``.

    ``supports`` maps ``a -> (rows, cols)``; increasing sets along the order give
    a compatible family.
    """
    gens = {}
    for a, (rows, cols) in supports.items():
        gs = []
        for i, j in itertools.product(sorted(rows), sorted(cols)):
            g = zeros_like_shape(shape, True)
            g[i, j] = Fraction(1)
            gs.append(g)
        gens[a] = gs
    return TROFamily(order, gens, tuple(shape))


def random_in_span(rng: random.Random, generators: Sequence[np.ndarray], shape) -> np.ndarray:
    out = zeros_like_shape(shape, True)
    for g in generators:
        out = out + g * Fraction(rng.randint(-3, 3), rng.randint(1, 2))
    return out


def random_field(rng: random.Random, family: TROFamily, n_terms: int = 3) -> PosetFieldElement:
    keys = family.keys()
    out = PosetFieldElement.zero(family.shape)
    for _ in range(n_terms):
        a = rng.choice(keys)
        out = out + PosetFieldElement.chi(a, random_in_span(rng, family.generators[a], family.shape))
    return out
