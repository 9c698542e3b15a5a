"""Finite metric spaces, glued metrics on disjoint unions and min-plus composition.

All distances are :class:`fractions.Fraction`; infima over finite index sets are
attained minima, so every quantity here is exact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import InvariantViolation, StructuralError
from .exact import common_scale, q

Point = Hashable


def _matrix(rows, n_rows: int, n_cols: int, what: str) -> tuple[tuple[Fraction, ...], ...]:
    rows = [list(r) for r in rows]
    if len(rows) != n_rows or any(len(r) != n_cols for r in rows):
        raise StructuralError(f"{what}: expected a {n_rows}x{n_cols} matrix")
    return tuple(tuple(q(v) for v in r) for r in rows)


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Point identifiers plus an exact distance matrix.

    Construction only checks shape; :func:`validate_metric` checks the metric axioms.
    """

    points: tuple
    dist: tuple
    basepoint: Point | None = None

    def __post_init__(self):
        pts = tuple(self.points)
        if len(set(pts)) != len(pts):
            raise StructuralError("duplicate point identifiers")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dist", _matrix(self.dist, len(pts), len(pts), "dist"))
        if self.basepoint is not None and self.basepoint not in pts:
            raise StructuralError(f"basepoint {self.basepoint!r} is not a point")
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    @classmethod
    def from_function(cls, points: Sequence, fn: Callable[[Point, Point], object], basepoint=None):
        pts = tuple(points)
        return cls(pts, [[fn(a, b) for b in pts] for a in pts], basepoint)

    def __len__(self):
        return len(self.points)

    def index(self, p: Point) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise StructuralError(f"unknown point {p!r}") from None

    def d(self, a: Point, b: Point) -> Fraction:
        return self.dist[self.index(a)][self.index(b)]

    def subspace(self, points: Sequence) -> "FiniteMetricSpace":
        idx = [self.index(p) for p in points]
        base = self.basepoint if self.basepoint in points else None
        return FiniteMetricSpace(tuple(points), [[self.dist[i][j] for j in idx] for i in idx], base)

    def ball(self, center: Point, radius) -> list:
        r = q(radius)
        row = self.dist[self.index(center)]
        return [p for p, v in zip(self.points, row) if v <= r]

    def default_basepoint(self) -> Point:
        if not self.points:
            raise StructuralError("empty space has no basepoint")
        return self.basepoint if self.basepoint is not None else self.points[0]


def same_space(a: FiniteMetricSpace, b: FiniteMetricSpace) -> bool:
    return a.points == b.points and a.dist == b.dist


# ----------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    delta: Fraction | None
    profile: dict
    violation: dict | None = None


def _scaled(mat) -> np.ndarray:
    scale = common_scale(v for row in mat for v in row)
    ints = [[int(v * scale) for v in row] for row in mat]
    big = max((abs(v) for row in ints for v in row), default=0)
    dtype = np.int64 if big < 2**60 else object
    return np.array(ints, dtype=dtype).reshape(len(mat), len(mat[0]) if mat else 0)


def triangle_violation(mat) -> tuple[int, int, int] | None:
    """First index triple (i, j, k) with ``mat[i][k] > mat[i][j] + mat[j][k]``."""
    n = len(mat)
    if n < 3:
        return None
    D = _scaled(mat)
    for j in range(n):
        bad = D > (D[:, j][:, None] + D[j, :][None, :])
        if bad.any():
            i, k = map(int, np.argwhere(bad)[0])
            return (i, j, k)
    return None


def validate_metric(space: FiniteMetricSpace, radii: Sequence = ()) -> ValidationReport:
    """Check the metric axioms, uniform discreteness and the ball-size profile.

    Failures are reported (``ok=False`` plus the offending pair or triple), not raised.
    """
    pts, D = space.points, space.dist
    n = len(pts)
    radii = [q(r) for r in radii]
    profile = {r: max((len(space.ball(p, r)) for p in pts), default=0) for r in radii}
    off = [D[i][j] for i in range(n) for j in range(n) if i != j]
    delta = min(off) if off else None

    def fail(kind, *idx):
        return ValidationReport(False, delta, profile, {"kind": kind, "points": [pts[i] for i in idx]})

    for i in range(n):
        if D[i][i] != 0:
            return fail("diagonal", i)
        for j in range(n):
            if D[i][j] < 0:
                return fail("nonnegativity", i, j)
            if D[i][j] != D[j][i]:
                return fail("symmetry", i, j)
            if i != j and D[i][j] == 0:
                return fail("positivity", i, j)
    tri = triangle_violation(D)
    if tri is not None:
        return fail("triangle", *tri)
    return ValidationReport(True, delta, profile)


# ----------------------------------------------------------------------------
# glued metrics


@dataclass(frozen=True)
class GluedMetric:
    """A metric on ``left ⊔ right`` given by the two pieces and the cross block.

    ``cross[i][j]`` is the distance from ``left.points[i]`` to ``right.points[j]``.
    ``midpoints`` is only set on products and records, for every cross pair, the
    index of the middle point attaining the minimum.
    """

    left: FiniteMetricSpace
    right: FiniteMetricSpace
    cross: tuple
    midpoints: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cross", _matrix(self.cross, len(self.left), len(self.right), "cross"))

    def d(self, x: Point, y: Point) -> Fraction:
        return self.cross[self.left.index(x)][self.right.index(y)]

    @property
    def gap(self) -> Fraction:
        return min(v for row in self.cross for v in row)

    def full_matrix(self) -> list[list[Fraction]]:
        nx = len(self.left)
        rows = [list(self.left.dist[i]) + list(self.cross[i]) for i in range(nx)]
        for j in range(len(self.right)):
            rows.append([self.cross[i][j] for i in range(nx)] + list(self.right.dist[j]))
        return rows

    def labels(self) -> list[tuple[str, Point]]:
        return [("X", p) for p in self.left.points] + [("Y", p) for p in self.right.points]

    def midpoint(self, x: Point, z: Point) -> int:
        if self.midpoints is None:
            raise StructuralError("this glue carries no midpoint table (not a product)")
        return self.midpoints[self.left.index(x)][self.right.index(z)]


def check_glue(d: GluedMetric) -> dict | None:
    """Return a violation record for ``d`` or ``None`` when it lies in D(X, Y)."""
    for side, sp in (("X", d.left), ("Y", d.right)):
        rep = validate_metric(sp)
        if not rep.ok:
            return {"kind": f"{side}-{rep.violation['kind']}", "points": rep.violation["points"]}
    for i, row in enumerate(d.cross):
        for j, v in enumerate(row):
            if v <= 0:
                return {"kind": "gap", "points": [("X", d.left.points[i]), ("Y", d.right.points[j])]}
    tri = triangle_violation(d.full_matrix())
    if tri is not None:
        labels = d.labels()
        return {"kind": "triangle", "points": [labels[k] for k in tri]}
    return None


def glue(X: FiniteMetricSpace, Y: FiniteMetricSpace, cross) -> GluedMetric:
    """Build a validated glued metric; raise with the violating triple otherwise."""
    d = GluedMetric(X, Y, cross)
    bad = check_glue(d)
    if bad is not None:
        raise InvariantViolation(f"not a glued metric: {bad['kind']} at {bad['points']}", bad)
    return d


def adjoint(d: GluedMetric) -> GluedMetric:
    """The same metric with the two sides swapped."""
    cross = [[d.cross[i][j] for i in range(len(d.left))] for j in range(len(d.right))]
    mids = None
    if d.midpoints is not None:
        mids = tuple(tuple(d.midpoints[i][j] for i in range(len(d.left))) for j in range(len(d.right)))
    return GluedMetric(d.right, d.left, cross, mids)


def compose(d1: GluedMetric, d2: GluedMetric) -> GluedMetric:
    """Min-plus product: the metric on ``X ⊔ Z`` with

    ``cross(x, z) = min_y d1(x, y) + d2(y, z)``.

    ``d1`` lives on ``X ⊔ Y`` and ``d2`` on ``Y ⊔ Z``; ties pick the lowest ``y``.
    """
    if not same_space(d1.right, d2.left):
        raise StructuralError("compose: middle spaces differ")
    ny = len(d1.right)
    cross, mids = [], []
    for row in d1.cross:
        crow, mrow = [], []
        for k in range(len(d2.right)):
            best, arg = None, -1
            for j in range(ny):
                s = row[j] + d2.cross[j][k]
                if best is None or s < best:
                    best, arg = s, j
            crow.append(best)
            mrow.append(arg)
        cross.append(crow)
        mids.append(tuple(mrow))
    out = GluedMetric(d1.left, d2.right, cross, tuple(mids))
    bad = check_glue(out)
    assert bad is None, f"min-plus product failed validation: {bad}"
    return out


@dataclass(frozen=True)
class DerivedMetrics:
    adjoint: GluedMetric
    d_r: FiniteMetricSpace  # on X
    d_l: FiniteMetricSpace  # on Y


def _derived(points, rows_a, rows_b, n_mid) -> list[list[Fraction]]:
    n = len(points)
    return [
        [Fraction(0) if i == j else min(rows_a[i][u] + rows_b[j][u] for u in range(n_mid)) for j in range(n)]
        for i in range(n)
    ]


def derived_metrics(d: GluedMetric) -> DerivedMetrics:
    """Adjoint plus the two metrics induced through the opposite side.

    ``d_r(x1, x2) = min_u d(x1, u) + d(x2, u)`` over ``u`` in Y for ``x1 != x2``;
    ``d_l`` is the same construction on Y through X.
    """
    X, Y = d.left, d.right
    star = adjoint(d)
    d_r = FiniteMetricSpace(X.points, _derived(X.points, d.cross, d.cross, len(Y)), X.basepoint)
    d_l = FiniteMetricSpace(Y.points, _derived(Y.points, star.cross, star.cross, len(X)), Y.basepoint)
    for sp in (d_r, d_l):
        rep = validate_metric(sp)
        if not rep.ok:
            raise InvariantViolation(f"derived metric invalid: {rep.violation}", rep.violation)
    dd = compose(d, star)
    for i in range(len(X)):
        for j in range(len(X)):
            if i != j:
                assert dd.cross[i][j] == d_r.dist[i][j]
    return DerivedMetrics(star, d_r, d_l)


def smallest_metric(X: FiniteMetricSpace, Y: FiniteMetricSpace, x0=None, y0=None) -> GluedMetric:
    """The glue ``d(x, y) = d_X(x, x0) + 1 + d_Y(y0, y)``, the bottom class of D(X, Y)."""
    x0 = X.default_basepoint() if x0 is None else x0
    y0 = Y.default_basepoint() if y0 is None else y0
    i0, j0 = X.index(x0), Y.index(y0)
    cross = [[X.dist[i][i0] + 1 + Y.dist[j0][j] for j in range(len(Y))] for i in range(len(X))]
    return glue(X, Y, cross)


# ----------------------------------------------------------------------------
# random instances (property suites)


def random_space(rng: random.Random, n: int, max_weight: int = 6, prefix: str = "p") -> FiniteMetricSpace:
    """Shortest-path metric of a complete graph with random positive rational weights."""
    W = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            W[i][j] = W[j][i] = Fraction(rng.randint(1, 2 * max_weight), rng.choice((1, 2)))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if W[i][k] + W[k][j] < W[i][j]:
                    W[i][j] = W[i][k] + W[k][j]
    return FiniteMetricSpace(tuple(f"{prefix}{i}" for i in range(n)), W)


def _diameter(sp: FiniteMetricSpace) -> Fraction:
    return max((v for row in sp.dist for v in row), default=Fraction(0))


def random_glue(rng: random.Random, X: FiniteMetricSpace, Y: FiniteMetricSpace, spread: int = 6) -> GluedMetric:
    """Random element of D(X, Y).

    Seed bridge weights are at least half the larger diameter, so no path through
    the other side can shorten d_X or d_Y; the cross block is the shortest-path
    closure through the bridges.
    """
    floor = max(_diameter(X), _diameter(Y)) / 2 + Fraction(1, 2)
    seed = [[floor + Fraction(rng.randint(0, 2 * spread), 2) for _ in Y.points] for _ in X.points]
    nx, ny = len(X), len(Y)
    cross = [
        [
            min(X.dist[i][a] + seed[a][b] + Y.dist[b][j] for a in range(nx) for b in range(ny))
            for j in range(ny)
        ]
        for i in range(nx)
    ]
    return glue(X, Y, cross)
