"""Block-class matrices over a union of half-axes, the sequence ``b_k`` and its corona point.

A glue of two axis unions ``Y = ∪ Y_i`` and ``Y' = ∪ Y'_j`` restricts to a glue of
each pair of axes, so it is recorded as a matrix of classes ``[d_ij]``.  Entry
classes live in a finite entry poset; the default is the chain ``0 < I`` where
``0`` is the smallest class and ``I`` the greatest.

Only part of the order on matrices can be read off entries: ``[b] <= [d]``
forces ``[b_ij] <= [d_ij]`` but not conversely, so comparisons are three-valued.

``chi_a(b) = [a <= b]`` and ``phi(chi_a)`` is the eventual value of
``chi_a(b_n)``.  A finitely supported diagonal ``a`` is eventually below every
``b_n``; an ``a`` with an off-diagonal entry or an infinite diagonal tail never is.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .coarse import GlueFamily, SpaceFamily, _axis
from .errors import Inconclusive, InvariantViolation, PreconditionError, StructuralError
from .metric import GluedMetric
from .topology import FinitePoset, GeneratedAlgebra, LimitWitness, SpectrumPoint, limit_signature

ENTRY_CHAIN = FinitePoset(("0", "I"), [[True, True], [False, True]])
DEFAULT_MARGIN = 16


def _bottom(P: FinitePoset):
    z = P.smallest()
    if z is None:
        raise StructuralError("entry poset needs a smallest (zero) class")
    return z


def _top(P: FinitePoset):
    for a in P.elements:
        if all(P.leq(b, a) for b in P.elements):
            return a
    return None


@dataclass(frozen=True)
class BlockClassMatrix:
    """Sparse matrix of entry classes indexed by ``(i, j)`` with ``i, j >= 1``.

    Absent entries are the zero class.  ``bound`` is the largest index carrying a
    declared entry (it may be declared larger).  With ``infinite_diagonal`` every
    diagonal entry beyond ``bound`` is the greatest class ``I``.
    """

    entries: Mapping = field(hash=False)
    poset: FinitePoset = ENTRY_CHAIN
    bound: int | None = None
    infinite_diagonal: bool = False

    def __post_init__(self):
        zero = _bottom(self.poset)
        clean = {}
        for (i, j), c in dict(self.entries).items():
            if not (isinstance(i, int) and isinstance(j, int)) or i < 1 or j < 1:
                raise StructuralError(f"block indices must be positive integers, got {(i, j)!r}")
            self.poset.index(c)
            if c != zero:
                clean[(i, j)] = c
        object.__setattr__(self, "entries", dict(sorted(clean.items())))
        top = max((max(i, j) for i, j in clean), default=0)
        if self.bound is None:
            object.__setattr__(self, "bound", top)
        elif self.bound < top:
            raise StructuralError(f"declared bound {self.bound} is below the support ({top})")
        if self.infinite_diagonal and _top(self.poset) is None:
            raise StructuralError("an infinite diagonal needs a greatest class")

    def entry(self, i: int, j: int):
        if self.infinite_diagonal and i == j and i > self.bound:
            return _top(self.poset)
        return self.entries.get((i, j), _bottom(self.poset))

    def support(self) -> list[tuple[int, int]]:
        return list(self.entries)

    def is_diagonal(self) -> bool:
        return all(i == j for i, j in self.entries)

    def is_zero(self) -> bool:
        return not self.entries and not self.infinite_diagonal

    def __eq__(self, other):
        return (
            isinstance(other, BlockClassMatrix)
            and self.poset == other.poset
            and self.entries == other.entries
            and self.infinite_diagonal == other.infinite_diagonal
            and (not self.infinite_diagonal or self.bound == other.bound)
        )

    def __hash__(self):
        return hash((tuple(self.entries.items()), self.infinite_diagonal))

    def __repr__(self):
        body = ", ".join(f"({i},{j})={c}" for (i, j), c in self.entries.items())
        tail = f", I for i>{self.bound}" if self.infinite_diagonal else ""
        return f"BlockClassMatrix({body}{tail})"


def zero_matrix(poset: FinitePoset = ENTRY_CHAIN) -> BlockClassMatrix:
    return BlockClassMatrix({}, poset)


def diagonal(classes: Mapping[int, object], poset: FinitePoset = ENTRY_CHAIN, **kw) -> BlockClassMatrix:
    return BlockClassMatrix({(i, i): c for i, c in classes.items()}, poset, **kw)


def b_sequence(k: int, poset: FinitePoset = ENTRY_CHAIN) -> BlockClassMatrix:
    """``b_k``: the greatest class on the first ``k`` diagonal places, zero elsewhere."""
    if not isinstance(k, int) or k < 1:
        raise StructuralError(f"b_k needs k >= 1, got {k!r}")
    return _b(k, poset)


def _b(k: int, poset: FinitePoset) -> BlockClassMatrix:
    top = _top(poset)
    return BlockClassMatrix({(i, i): top for i in range(1, k + 1)}, poset)


@dataclass(frozen=True)
class BlockValidation:
    ok: bool
    violation: dict | None = None


def validate_block_matrix(M: BlockClassMatrix) -> BlockValidation:
    """Each row and each column may carry at most one non-zero class."""
    rows: dict = {}
    cols: dict = {}
    for i, j in M.entries:
        rows.setdefault(i, []).append(j)
        cols.setdefault(j, []).append(i)
    for i in sorted(rows):
        if len(rows[i]) > 1:
            return BlockValidation(False, {"kind": "row", "index": i, "entries": [[i, j] for j in rows[i]]})
    for j in sorted(cols):
        if len(cols[j]) > 1:
            return BlockValidation(False, {"kind": "column", "index": j, "entries": [[i, j] for i in cols[j]]})
    return BlockValidation(True)


# ----------------------------------------------------------------------------
# order


@dataclass(frozen=True)
class FamilyVerdict:
    kind: str  # "leq" | "not-leq" | "inconclusive"
    reason: str
    witness: tuple | None = None


def family_leq(M1: BlockClassMatrix, M2: BlockClassMatrix) -> FamilyVerdict:
    """Three-valued comparison ``[M1] <= [M2]``.

    An entry with ``M1_ij ≰ M2_ij`` refutes the order.  Otherwise the answer is
    positive only when ``M1`` is zero, ``M1 == M2``, or both are diagonal with
    entries below ``I`` (the diagonal family, where entrywise dominance is exact).
    """
    if M1.poset != M2.poset:
        raise StructuralError("block matrices over different entry posets")
    P = M1.poset
    reach = max(M1.bound, M2.bound) + 1
    cells = set(M1.entries) | {(i, i) for i in range(1, reach + 1)}
    for i, j in sorted(cells):
        if not P.leq(M1.entry(i, j), M2.entry(i, j)):
            return FamilyVerdict("not-leq", f"entry ({i},{j}): {M1.entry(i, j)} ≰ {M2.entry(i, j)}", (i, j))
    if M1.is_zero():
        return FamilyVerdict("leq", "zero class is the smallest")
    if M1 == M2:
        return FamilyVerdict("leq", "equal matrices")
    top = _top(P)
    if top is not None and M1.is_diagonal() and M2.is_diagonal():
        return FamilyVerdict("leq", "diagonal family, entrywise dominance")
    return FamilyVerdict("inconclusive", "entrywise dominance without a family certificate")


def chi(a: BlockClassMatrix, b: BlockClassMatrix) -> int:
    """``chi_a(b) = [a <= b]``; raises :class:`Inconclusive` when undecided."""
    v = family_leq(a, b)
    if v.kind == "inconclusive":
        raise Inconclusive(f"cannot decide {a!r} <= {b!r}", [{"a": repr(a), "b": repr(b), "outcome": v.kind}])
    return int(v.kind == "leq")


# ----------------------------------------------------------------------------
# the corona point


@dataclass(frozen=True)
class CoronaEvaluation:
    value: int
    N: int
    probes: tuple = ()  # ((n, chi(b_n)), ...)


def _probe(mats: Sequence[BlockClassMatrix], n: int) -> int:
    bn = _b(n, mats[0].poset)
    out = 1
    for a in mats:
        try:
            out *= chi(a, bn)
        except Inconclusive as exc:
            raise Inconclusive(f"probe n={n} undecided", [{"n": n, **p} for p in exc.probes]) from None
    return out


def corona_phi_product(mats: Sequence[BlockClassMatrix], margin: int = DEFAULT_MARGIN) -> CoronaEvaluation:
    """Eventual value of ``n -> Π chi_a(b_n)`` with ``N`` the largest declared bound."""
    if not mats:
        raise StructuralError("need at least one matrix")
    if margin < 1:
        raise StructuralError("margin must be positive")
    N = max(a.bound for a in mats)
    probes = tuple((n, _probe(mats, n)) for n in range(1, N + margin + 1))
    tail = {v for n, v in probes if n > N}
    if len(tail) != 1:
        raise InvariantViolation(f"chi(b_n) is not constant beyond N={N}", witness=list(probes))
    return CoronaEvaluation(tail.pop(), N, probes)


def corona_phi(a: BlockClassMatrix, margin: int = DEFAULT_MARGIN) -> CoronaEvaluation:
    """``phi(chi_a) = lim chi_a(b_n)`` with its stabilization index ``N = bound(a)``."""
    return corona_phi_product([a], margin)


@dataclass(frozen=True)
class AccumulationRefutation:
    candidate: BlockClassMatrix
    k0: int | None  # smallest k >= 0 with candidate <= b_k (b_0 is the zero matrix)
    c: BlockClassMatrix | None  # b_{k0+1}; None when U_candidate holds no b_k
    exceptions: tuple  # k's the neighbourhood can possibly contain: 1..k0
    members: tuple  # probed k's with b_k in the neighbourhood
    probes: tuple


def refute_accumulation(candidate: BlockClassMatrix, margin: int = DEFAULT_MARGIN) -> AccumulationRefutation:
    """Neighbourhood of ``candidate`` holding only finitely many ``b_k``.

    When ``candidate <= b_k0`` the neighbourhood is ``U_candidate ∩ V_c`` with
    ``c = b_{k0+1}``; every ``b_k`` with ``k > k0`` lies above ``c`` and so outside
    ``V_c``.  When no ``b_k`` dominates ``candidate`` the neighbourhood is
    ``U_candidate`` itself.
    """
    check = validate_block_matrix(candidate)
    if not check.ok:
        raise PreconditionError(f"candidate fails the row/column constraint: {check.violation}")
    P = candidate.poset
    limit = candidate.bound + margin
    probes = []
    in_U = {}
    for k in range(0, limit + 1):
        v = family_leq(candidate, _b(k, P) if k else zero_matrix(P))
        probes.append({"probe": f"candidate <= b_{k}", "outcome": v.kind})
        if v.kind == "inconclusive":
            raise Inconclusive(f"cannot decide candidate <= b_{k}", probes)
        in_U[k] = v.kind == "leq"
    k0 = next((k for k in range(limit + 1) if in_U[k]), None)
    if k0 is None:
        return AccumulationRefutation(candidate, None, None, (), (), tuple(probes))
    c = _b(k0 + 1, P)
    members = []
    for k in range(1, limit + 1):
        v = family_leq(c, _b(k, P))
        probes.append({"probe": f"b_{k0 + 1} <= b_{k}", "outcome": v.kind})
        if v.kind == "inconclusive":
            raise Inconclusive(f"cannot decide b_{k0 + 1} <= b_{k}", probes)
        if in_U[k] and v.kind == "not-leq":
            members.append(k)
    exceptions = tuple(range(1, k0 + 1))
    if not set(members) <= set(exceptions):
        raise InvariantViolation("a b_k beyond k0 lies in the neighbourhood", witness=members)
    return AccumulationRefutation(candidate, k0, c, exceptions, tuple(members), tuple(probes))


@dataclass(frozen=True)
class EscapeWitness:
    a: BlockClassMatrix
    phi: int  # phi(chi_a)
    chi_at_b: int  # chi_a(b)
    branch: str


def corona_escape_witness(b: BlockClassMatrix, margin: int = DEFAULT_MARGIN) -> EscapeWitness:
    """An ``a`` with ``phi(chi_a) != chi_a(b)``, so the corona point is not ``b``.

    If ``phi(chi_b) = 0`` then ``a = b`` already separates (``chi_b(b) = 1``).
    Otherwise ``b`` is diagonal with support in ``{1..n-1}`` for ``n = bound+1``
    and ``a = b_n`` has ``phi = 1`` while ``chi_{b_n}(b) = 0``.
    """
    check = validate_block_matrix(b)
    if not check.ok:
        raise PreconditionError(f"b fails the row/column constraint: {check.violation}")
    phi_b = corona_phi(b, margin).value
    if phi_b != chi(b, b):
        return EscapeWitness(b, phi_b, chi(b, b), "b itself")
    a = _b(b.bound + 1, b.poset)
    w = EscapeWitness(a, corona_phi(a, margin).value, chi(a, b), f"b_{b.bound + 1}")
    if w.phi == w.chi_at_b:
        raise InvariantViolation("escape witness does not separate", witness=w)
    return w


# ----------------------------------------------------------------------------
# matrices read off genuine glues


def axis_pairing_glue(sigma: Mapping[int, int], axes: int) -> GlueFamily:
    """Glue of two axis unions bridging ``(i, n)`` to ``(sigma(i), n)'`` at cost 1.

    Cross distances are the shortest paths through those bridges and the bridge
    between the origins: ``|a-b|+1`` along a paired axis, ``a+b+1`` otherwise.
    """
    if len(set(sigma.values())) != len(sigma):
        raise StructuralError("sigma must be injective")
    fam = SpaceFamily.axis_union(axes)

    def cross(x, y):
        (i, a), (j, b) = _axis(x), _axis(y)
        if i and sigma.get(i) == j:
            return Fraction(abs(a - b) + 1)
        return Fraction(a + b + 1)

    return GlueFamily(fam, fam, cross, f"pairing{dict(sorted(sigma.items()))}")


def extract_block_matrix(d: GluedMetric, radius: int) -> BlockClassMatrix:
    """Classes of the axis blocks seen at scale ``radius``.

    Block ``(i, j)`` gets ``I`` when the far ends ``(i, R)`` and ``(j, R)'`` are
    within ``R/2`` of each other, i.e. the axes stay at bounded distance.
    """
    R = int(radius)
    ends_x = {_axis(p)[0]: p for p in d.left.points if p != "0" and _axis(p)[1] == R}
    ends_y = {_axis(p)[0]: p for p in d.right.points if p != "0" and _axis(p)[1] == R}
    entries = {
        (i, j): "I" for i, x in ends_x.items() for j, y in ends_y.items() if d.d(x, y) <= Fraction(R, 2)
    }
    return BlockClassMatrix(entries)


def block_order(a: BlockClassMatrix, b: BlockClassMatrix) -> bool:
    """Order oracle for field and spectrum code; undecided comparisons raise."""
    return chi(a, b) == 1


def corona_point(generators: Sequence[BlockClassMatrix], margin: int = DEFAULT_MARGIN) -> SpectrumPoint:
    """The limit of ``b_n`` as a spectrum point over the given generators."""
    if not generators:
        raise StructuralError("need at least one generator")
    P = generators[0].poset
    horizon = max(g.bound for g in generators)
    witness = LimitWitness("b_n", lambda n: _b(n, P), horizon, margin)
    universe = tuple(dict.fromkeys(list(generators) + [_b(n, P) for n in range(1, horizon + margin + 1)]))
    alg = GeneratedAlgebra(tuple(generators), universe, block_order, (witness,))
    sig = limit_signature(alg, witness)
    return SpectrumPoint(tuple(zip(alg.generators, sig)), (("limit", "b_n"),))
