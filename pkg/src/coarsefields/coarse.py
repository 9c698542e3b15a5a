"""Coarse-order certificates and truncatable families of spaces and glues."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Callable

from .errors import PreconditionError, StructuralError
from .exact import q
from .metric import FiniteMetricSpace, GluedMetric, glue, same_space

REPAIR_SLOPE = Fraction(1, 1024)


@dataclass(frozen=True)
class ControlFunction:
    """Strictly increasing piecewise-linear map of [0, inf), linear past the last breakpoint.

    ``constraints`` holds the ``(d1, d2)`` pairs the certificate was built to
    dominate, i.e. ``phi(d1) >= d2`` for each.
    """

    breakpoints: tuple
    constraints: tuple = field(default=(), compare=False)
    repair_slope: Fraction = field(default=REPAIR_SLOPE, compare=False)

    def __post_init__(self):
        bps = tuple((q(t), q(v)) for t, v in self.breakpoints)
        if not bps or bps[0][0] != 0:
            raise StructuralError("control function must start at t = 0")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "constraints", tuple((q(a), q(b)) for a, b in self.constraints))

    @classmethod
    def identity(cls) -> "ControlFunction":
        return cls(((0, 0), (1, 1)))

    def _tail_slope(self) -> Fraction:
        if len(self.breakpoints) == 1:
            return Fraction(1)
        (t0, v0), (t1, v1) = self.breakpoints[-2:]
        return (v1 - v0) / (t1 - t0)

    def __call__(self, t) -> Fraction:
        t = q(t)
        if t < 0:
            raise PreconditionError("control functions live on [0, inf)")
        bps = self.breakpoints
        for (t0, v0), (t1, v1) in zip(bps, bps[1:]):
            if t <= t1:
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        tl, vl = bps[-1]
        return vl + self._tail_slope() * (t - tl)

    def inverse(self, s) -> Fraction:
        """Preimage of ``s``; values below ``phi(0)`` map to 0."""
        s = q(s)
        bps = self.breakpoints
        if s <= bps[0][1]:
            return Fraction(0)
        for (t0, v0), (t1, v1) in zip(bps, bps[1:]):
            if s <= v1:
                return t0 + (t1 - t0) * (s - v0) / (v1 - v0)
        tl, vl = bps[-1]
        return tl + (s - vl) / self._tail_slope()

    def is_strictly_increasing(self) -> bool:
        vals = [v for _, v in self.breakpoints]
        ts = [t for t, _ in self.breakpoints]
        return (
            all(a < b for a, b in zip(ts, ts[1:]))
            and all(a < b for a, b in zip(vals, vals[1:]))
            and self._tail_slope() > 0
            and vals[0] >= 0
        )

    def dominates(self, pairs=None) -> bool:
        pairs = self.constraints if pairs is None else pairs
        return all(self(a) >= b for a, b in pairs)

    def then(self, outer: "ControlFunction") -> "ControlFunction":
        """The composite ``outer(self(t))``, exact as a piecewise-linear map."""
        ts = {t for t, _ in self.breakpoints}
        ts |= {self.inverse(s) for s, _ in outer.breakpoints if s >= self.breakpoints[0][1]}
        ts = sorted(ts)
        if len(ts) == 1:
            ts.append(ts[0] + 1)
        return ControlFunction(tuple((t, outer(self(t))) for t in ts))


def tightest_control(pairs, slope: Fraction = REPAIR_SLOPE) -> ControlFunction:
    """Smallest monotone certificate with ``phi(a) >= b`` for all ``(a, b)`` in ``pairs``.

    The step function ``t -> max{b : a <= t}`` is sampled at the distinct ``a``
    values; flat or decreasing steps are lifted to the repair slope so the
    result is strictly increasing.
    """
    pairs = [(q(a), q(b)) for a, b in pairs]
    if not pairs:
        return ControlFunction.identity()
    steps: dict[Fraction, Fraction] = {}
    for a, b in pairs:
        steps[a] = max(steps.get(a, b), b)
    knots, running = [], None
    for t in sorted(steps):
        running = steps[t] if running is None else max(running, steps[t])
        knots.append([t, running])
    for k in range(1, len(knots)):
        floor_v = knots[k - 1][1] + slope * (knots[k][0] - knots[k - 1][0])
        knots[k][1] = max(knots[k][1], floor_v)
    if knots[0][0] == 0:
        # a zero distance only arises off the cross block; keep phi(0) as given
        bps = [tuple(k) for k in knots]
    else:
        first_slope = (
            (knots[1][1] - knots[0][1]) / (knots[1][0] - knots[0][0]) if len(knots) > 1 else Fraction(1)
        )
        start = max(Fraction(0), knots[0][1] - first_slope * knots[0][0])
        bps = [(Fraction(0), start)] + [tuple(k) for k in knots]
    return ControlFunction(tuple(bps), tuple(pairs), slope)


def _cross_pairs(d1: GluedMetric, d2: GluedMetric):
    return [(a, b) for r1, r2 in zip(d1.cross, d2.cross) for a, b in zip(r1, r2)]


def _step_values(pairs, ts):
    return [max((b for a, b in pairs if a <= t), default=None) for t in ts]


@dataclass(frozen=True)
class CompareVerdict:
    """Outcome of :func:`control_compare`.

    ``kind`` is one of ``leq``, ``geq``, ``equivalent``, ``inconclusive``.
    ``phi`` certifies ``d2 <= phi(d1)``; ``psi`` certifies ``d1 <= psi(d2)``.
    """

    kind: str
    phi: ControlFunction | None = None
    psi: ControlFunction | None = None
    detail: dict = field(default_factory=dict, compare=False)

    @property
    def certifies_leq(self) -> bool:
        return self.kind in ("leq", "equivalent")

    @property
    def certifies_geq(self) -> bool:
        return self.kind in ("geq", "equivalent")


def _verdict(up: bool, down: bool, phi, psi, detail) -> CompareVerdict:
    if up and down:
        return CompareVerdict("equivalent", phi, psi, detail)
    if up:
        return CompareVerdict("leq", phi, None, detail)
    if down:
        return CompareVerdict("geq", None, psi, detail)
    return CompareVerdict("inconclusive", None, None, detail)


def control_compare(d1, d2, radius=None) -> CompareVerdict:
    """Certify the coarse order between two glues.

    With two :class:`GluedMetric` values the comparison is a snapshot: on finite
    data both certificates always exist, so the verdict is ``equivalent`` with
    the tightest certificates attached.  With two :class:`GlueFamily` values and a
    truncation ``radius`` R, a direction is certified only when the tightest
    step function at R and at 2R agree for all arguments up to R; an unstable
    direction is never claimed, and if neither is stable the answer is
    ``inconclusive``.
    """
    if isinstance(d1, GluedMetric) and isinstance(d2, GluedMetric):
        if not (same_space(d1.left, d2.left) and same_space(d1.right, d2.right)):
            raise StructuralError("control_compare: glues live on different spaces")
        pairs = _cross_pairs(d1, d2)
        phi = tightest_control(pairs)
        psi = tightest_control([(b, a) for a, b in pairs])
        return CompareVerdict("equivalent", phi, psi, {"mode": "snapshot"})
    if not (isinstance(d1, GlueFamily) and isinstance(d2, GlueFamily)):
        raise StructuralError("control_compare: pass two glues or two glue families")
    if radius is None:
        raise StructuralError("control_compare on families needs a truncation radius")
    if d1.left != d2.left or d1.right != d2.right:
        raise StructuralError("control_compare: families live on different spaces")
    R = q(radius)
    small = (d1.truncate(R), d2.truncate(R))
    large = (d1.truncate(2 * R), d2.truncate(2 * R))
    pairs_s, pairs_l = _cross_pairs(*small), _cross_pairs(*large)

    def stable(ps, pl):
        ts = sorted({a for a, _ in ps if a <= R})
        return _step_values(ps, ts) == _step_values(pl, ts), ts

    up, ts_up = stable(pairs_s, pairs_l)
    flip = lambda ps: [(b, a) for a, b in ps]  # noqa: E731
    down, ts_down = stable(flip(pairs_s), flip(pairs_l))
    detail = {"mode": "family", "radius": R, "stable_leq": up, "stable_geq": down}
    return _verdict(up, down, tightest_control(pairs_l), tightest_control(flip(pairs_l)), detail)


# ----------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class SpaceFamily:
    """An infinite (or large) space that can be truncated to a finite ball.

    kinds: ``half-line`` (N_0 with |m - n|), ``axis-union`` (the union of the
    coordinate half-axes of l_1, glued at the origin) and ``explicit``.
    """

    kind: str
    axes: int | None = None
    space: FiniteMetricSpace | None = None

    @classmethod
    def half_line(cls) -> "SpaceFamily":
        return cls("half-line")

    @classmethod
    def axis_union(cls, axes: int | None = None) -> "SpaceFamily":
        return cls("axis-union", axes=axes)

    @classmethod
    def explicit(cls, space: FiniteMetricSpace) -> "SpaceFamily":
        return cls("explicit", space=space)

    def __post_init__(self):
        if self.kind not in ("half-line", "axis-union", "explicit"):
            raise StructuralError(f"unknown family kind {self.kind!r}")
        if self.kind == "explicit" and self.space is None:
            raise StructuralError("explicit family needs a space")

    @property
    def basepoint(self):
        if self.kind == "half-line":
            return 0
        if self.kind == "axis-union":
            return "0"
        return self.space.default_basepoint()

    def distance(self, a, b) -> Fraction:
        if self.kind == "half-line":
            return Fraction(abs(a - b))
        if self.kind == "axis-union":
            (ia, na), (ib, nb) = _axis(a), _axis(b)
            # the origin sits on every axis, where na + nb = |na - nb|
            return Fraction(abs(na - nb) if ia == ib else na + nb)
        return self.space.d(a, b)

    def points(self, radius) -> list:
        R = q(radius)
        if self.kind == "half-line":
            return list(range(floor(R) + 1))
        if self.kind == "axis-union":
            n_axes = self.axes if self.axes is not None else max(1, floor(R))
            return ["0"] + [f"{i}:{n}" for i in range(1, n_axes + 1) for n in range(1, floor(R) + 1)]
        return self.space.ball(self.space.default_basepoint(), R)

    def truncate(self, radius) -> FiniteMetricSpace:
        pts = self.points(radius)
        return FiniteMetricSpace.from_function(pts, self.distance, self.basepoint)


def _axis(p) -> tuple[int, int]:
    if p == "0":
        return (0, 0)
    i, n = p.split(":")
    return (int(i), int(n))


@dataclass(frozen=True)
class GlueFamily:
    """A glue defined by a cross-distance formula on two space families."""

    left: SpaceFamily
    right: SpaceFamily
    cross: Callable = field(compare=False)
    name: str = ""

    def truncate(self, radius) -> GluedMetric:
        X, Y = self.left.truncate(radius), self.right.truncate(radius)
        return glue(X, Y, [[self.cross(x, y) for y in Y.points] for x in X.points])

    @classmethod
    def smallest(cls, left: SpaceFamily, right: SpaceFamily, x0=None, y0=None) -> "GlueFamily":
        x0 = left.basepoint if x0 is None else x0
        y0 = right.basepoint if y0 is None else y0
        return cls(
            left,
            right,
            lambda x, y: left.distance(x, x0) + 1 + right.distance(y0, y),
            f"smallest({x0!r},{y0!r})",
        )
