"""Matrix fields sampled on a parameter grid: snapping near-projections and frames.

Module elements are matrices ``m`` with inner products ``<m,n>_A = m n*`` and
``<m,n>_B = m* n``.  Where ``a = m m*`` is close to a projection (``‖a-a²‖ < 3/16``),
``g^{1/2}(a) m`` has left Gram ``f(a)``, an exact projection up to the eigensolver.
A piecewise-linear blend with one grid step of collar joins the corrected field
to ``m`` away from ``t0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import GridTooCoarse, InvariantViolation, PreconditionError, StructuralError
from .exact import q
from .fields import adj
from .linalg import (
    PROJECTION_THRESHOLD,
    apply_function,
    f_cut,
    jacobi_eigh,
    op_norm,
    projection_defect,
    sqrt_g_cut,
)

ANCHOR_TOL = 1e-10
RESULT_TOL = 1e-9


@dataclass(frozen=True)
class GridField:
    """A matrix per node of an increasing rational grid in ``[0, 1]``."""

    grid: tuple
    values: tuple = field(compare=False)
    modulus: Fraction | None = None

    def __post_init__(self):
        grid = tuple(q(t) for t in self.grid)
        object.__setattr__(self, "grid", grid)
        if len(grid) != len(self.values) or not grid:
            raise StructuralError("grid and values must be non-empty and of equal length")
        if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 0 or grid[-1] > 1:
            raise StructuralError("grid must be strictly increasing inside [0, 1]")
        vals = tuple(np.asarray(v) for v in self.values)
        if any(v.ndim != 2 or v.shape != vals[0].shape for v in vals):
            raise StructuralError("grid values must be matrices of one shape")
        object.__setattr__(self, "values", vals)
        if self.modulus is not None:
            object.__setattr__(self, "modulus", q(self.modulus))
            for i, ratio in enumerate(self.step_ratios()):
                if ratio > float(self.modulus) * (1 + 1e-9) + 1e-12:
                    raise InvariantViolation(
                        f"modulus {self.modulus} fails between nodes {i} and {i + 1} (ratio {ratio:.6g})",
                        witness={"index": i, "ratio": ratio},
                    )

    @classmethod
    def sample(cls, fn, n_nodes: int, modulus=None) -> "GridField":
        grid = [Fraction(k, n_nodes - 1) for k in range(n_nodes)]
        return cls(tuple(grid), tuple(np.asarray(fn(t)) for t in grid), modulus)

    @property
    def shape(self):
        return self.values[0].shape

    def __len__(self):
        return len(self.grid)

    def index(self, t) -> int:
        try:
            return self.grid.index(q(t))
        except ValueError:
            raise StructuralError(f"{t} is not a grid node") from None

    def step_ratios(self) -> list[float]:
        return [
            op_norm(np.asarray(b, dtype=complex) - np.asarray(a, dtype=complex)) / float(t1 - t0)
            for a, b, t0, t1 in zip(self.values, self.values[1:], self.grid, self.grid[1:])
        ]

    def observed_modulus(self) -> float:
        return max(self.step_ratios(), default=0.0)

    def with_values(self, values) -> "GridField":
        return GridField(self.grid, tuple(values))

    def left_gram(self) -> list[np.ndarray]:
        return [v @ adj(v) for v in self.values]


def _c(M) -> np.ndarray:
    return np.asarray(M, dtype=complex)


def _component(flags: Sequence[bool], i0: int) -> tuple[int, int]:
    lo = hi = i0
    while lo > 0 and flags[lo - 1]:
        lo -= 1
    while hi < len(flags) - 1 and flags[hi + 1]:
        hi += 1
    return lo, hi


def blend_weights(n: int, inner: tuple[int, int]) -> list[Fraction]:
    """Node values of the hat-shaped partition function: 1 on ``inner``, 0 off it.

    Between nodes the function is linear, so the transition occupies exactly one
    grid step on each side of ``inner`` (the collar).
    """
    lo, hi = inner
    return [Fraction(1) if lo <= i <= hi else Fraction(0) for i in range(n)]


@dataclass(frozen=True)
class StabilizeResult:
    n: GridField
    U: tuple  # index interval where ‖a - a²‖ < 3/16
    inner: tuple  # index interval where n = g^{1/2}(a) m
    sup_error: float
    idempotency: float  # max over U of ‖f(a) - f(a)²‖
    gram_defect: float  # max over inner of ‖<n,n> - <n,n>²‖
    defects: tuple  # ‖a - a²‖ per node
    eigenvalues: tuple  # spectrum of a per node
    achievable: float


def stabilize_projection(m: GridField, t0, eps) -> StabilizeResult:
    """Replace ``m`` near ``t0`` by a field whose left Gram is a projection.

    ``U`` is the grid component of ``{‖a-a²‖ < 3/16}`` containing ``t0``.  The
    corrected field ``n' = g^{1/2}(a) m`` is used on the inner interval, grown from
    ``t0`` while ``‖n'-m‖ < eps`` and kept one step inside ``U``; outside it the
    blend returns ``m``.  ``n(t0) = m(t0)`` is anchored exactly.
    """
    i0 = m.index(t0)
    eps = float(q(eps))
    a = [_c(x) for x in m.left_gram()]
    if projection_defect(a[i0]) > ANCHOR_TOL:
        raise PreconditionError(f"<m,m>(t0) is not a projection (defect {projection_defect(a[i0]):.3g})")
    thr = float(PROJECTION_THRESHOLD)
    eig = [jacobi_eigh(x)[0] for x in a]
    defects = [max((abs(x - x * x) for x in w), default=0.0) for w in eig]
    U = _component([d < thr for d in defects], i0)
    lo_U, hi_U = U
    corrected = {i: apply_function(sqrt_g_cut, a[i]) @ _c(m.values[i]) for i in range(lo_U, hi_U + 1)}
    corrected[i0] = m.values[i0]
    dev = {i: op_norm(_c(corrected[i]) - _c(m.values[i])) for i in corrected}

    # the collar must stay inside U unless U reaches the end of the grid
    lo_cap = lo_U if lo_U == 0 else lo_U + 1
    hi_cap = hi_U if hi_U == len(m) - 1 else hi_U - 1
    lo = hi = i0
    while lo - 1 >= lo_cap and dev[lo - 1] < eps:
        lo -= 1
    while hi + 1 <= hi_cap and dev[hi + 1] < eps:
        hi += 1
    neighbours = [dev[j] for j in (lo - 1, hi + 1) if j in dev and lo_cap <= j <= hi_cap]
    achievable = min(neighbours) if neighbours else 0.0
    if (lo, hi) == (i0, i0) and neighbours:
        raise GridTooCoarse(
            f"eps={eps} admits no grid step around t0; smallest eps reaching a neighbour exceeds {achievable:.6g}",
            achievable=achievable,
        )
    w = blend_weights(len(m), (lo, hi))
    values = [corrected[i] if w[i] == 1 and i != i0 else v for i, v in enumerate(m.values)]
    n = m.with_values(values)
    sup_error = max(op_norm(_c(x) - _c(y)) for x, y in zip(n.values, m.values))
    idem = 0.0
    for i in range(lo_U, hi_U + 1):
        fa = apply_function(f_cut, a[i])
        idem = max(idem, op_norm(fa - fa @ fa))
    gram = max(projection_defect(_c(n.values[i]) @ _c(n.values[i]).conj().T) for i in range(lo, hi + 1))
    return StabilizeResult(
        n, U, (lo, hi), sup_error, idem, gram, tuple(defects), tuple(tuple(map(float, w_)) for w_ in eig), achievable
    )


def project_out(n: np.ndarray, others: Sequence[np.ndarray]) -> np.ndarray:
    """``n - Σ <n, e> e`` with ``<n, e> = n e*``; exact for object arrays."""
    out = n
    for e in others:
        out = out - (out @ adj(e)) @ e
    return out


@dataclass(frozen=True)
class PairResult:
    m: GridField
    n: GridField
    U: tuple
    cross: float  # max over U of ‖m' n'*‖
    gram_defect: float
    first: StabilizeResult
    second: StabilizeResult


def _intersect(*intervals) -> tuple[int, int]:
    lo = max(i[0] for i in intervals)
    hi = min(i[1] for i in intervals)
    if lo > hi:
        raise InvariantViolation("stabilized intervals do not overlap", witness=list(intervals))
    return lo, hi


def orthogonalize_pair(m: GridField, n: GridField, t0, eps) -> PairResult:
    """Stabilize ``m``, remove its component from ``n``, stabilize the remainder."""
    res = frame_extend([m, n], t0, eps, check_frame=False)
    (mp, np_), (r1, r2) = res.frame, res.steps
    if res.cross > RESULT_TOL or res.gram_defect > RESULT_TOL:
        raise InvariantViolation("orthogonalization failed on U", witness={"cross": res.cross, "gram": res.gram_defect})
    return PairResult(mp, np_, res.U, res.cross, res.gram_defect, r1, r2)


@dataclass(frozen=True)
class FrameResult:
    frame: tuple
    U: tuple
    gram_error: float  # max over U of ‖Gram - I‖ (only meaningful for an orthonormal frame)
    cross: float
    gram_defect: float
    idempotency: float  # max over U of ‖p - p²‖, p = Σ e*e
    steps: tuple


def frame_extend(frame: Sequence[GridField], t0, eps, check_frame: bool = True) -> FrameResult:
    """Extend a frame orthonormal at ``t0`` to an orthonormal frame on a grid interval.

    Each element in turn has the earlier corrected elements projected out and is
    then stabilized.  With ``check_frame`` the Gram matrix at ``t0`` must be the
    identity; otherwise only the pairwise preconditions of a single pair are used.
    """
    if not frame:
        raise StructuralError("empty frame")
    i0 = frame[0].index(t0)
    if any(f.grid != frame[0].grid for f in frame):
        raise StructuralError("frame fields live on different grids")
    at0 = [_c(f.values[i0]) for f in frame]
    for j, e in enumerate(at0):
        if projection_defect(e @ e.conj().T) > ANCHOR_TOL:
            raise PreconditionError(f"<e{j},e{j}>(t0) is not a projection")
        for k in range(j):
            if op_norm(e @ at0[k].conj().T) > ANCHOR_TOL:
                raise PreconditionError(f"e{k} and e{j} are not orthogonal at t0")
    if check_frame:
        gram = _gram(at0)
        if np.abs(gram - np.eye(len(at0))).max() > ANCHOR_TOL:
            raise PreconditionError("frame is not orthonormal at t0 (rank loss or non-unit element)")

    done: list[GridField] = []
    steps = []
    for f in frame:
        if done:
            vals = [
                f.values[i] if i == i0 else project_out(_c(f.values[i]), [_c(d.values[i]) for d in done])
                for i in range(len(f))
            ]
            f = f.with_values(vals)
        r = stabilize_projection(f, t0, eps)
        steps.append(r)
        done.append(r.n)
    U = _intersect(*(r.inner for r in steps))
    cross = gram_def = gram_err = idem = 0.0
    for i in range(U[0], U[1] + 1):
        es = [_c(d.values[i]) for d in done]
        for j, e in enumerate(es):
            gram_def = max(gram_def, projection_defect(e @ e.conj().T))
            for k in range(j):
                cross = max(cross, op_norm(e @ es[k].conj().T))
        if check_frame:
            gram_err = max(gram_err, float(np.abs(_gram(es) - np.eye(len(es))).max()))
        p = sum(e.conj().T @ e for e in es)
        idem = max(idem, op_norm(p - p @ p))
    return FrameResult(tuple(done), U, gram_err, cross, gram_def, idem, tuple(steps))


def _gram(es) -> np.ndarray:
    """Scalar Gram matrix of row-vector frame elements (``e_j e_k*``)."""
    if any(e.shape[0] != 1 for e in es):
        return np.array([[np.trace(e @ f.conj().T) for f in es] for e in es])
    return np.array([[(e @ f.conj().T)[0, 0] for f in es] for e in es])
