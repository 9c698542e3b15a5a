import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from coarsefields import metric
from coarsefields.errors import InvariantViolation, StructuralError


def line(points, prefix="p", base=None):
    pts = [f"{prefix}{v}" for v in points]
    return metric.FiniteMetricSpace(tuple(pts), [[abs(a - b) for b in points] for a in points], base)


def test_validate_reports_each_failure_kind():
    ok = metric.validate_metric(line([0, 1, 3]), radii=[1, 2])
    assert ok.ok and ok.delta == 1 and ok.profile == {1: 2, 2: 3}
    bad = metric.FiniteMetricSpace(("a", "b", "c"), [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    rep = metric.validate_metric(bad)
    assert not rep.ok and rep.violation["kind"] == "triangle"
    assert set(rep.violation["points"]) == {"a", "b", "c"}
    asym = metric.FiniteMetricSpace(("a", "b"), [[0, 1], [2, 0]])
    assert metric.validate_metric(asym).violation["kind"] == "symmetry"
    zero = metric.FiniteMetricSpace(("a", "b"), [[0, 0], [0, 0]])
    assert metric.validate_metric(zero).violation["kind"] == "positivity"


def test_floats_are_rejected():
    with pytest.raises(StructuralError):
        metric.FiniteMetricSpace(("a",), [[0.0]])


def test_glue_rejects_shortcuts_with_the_triple():
    X, Y = line([0, 10], "x"), line([0], "y")
    with pytest.raises(InvariantViolation) as err:
        metric.glue(X, Y, [[1], [1]])
    assert err.value.witness["kind"] == "triangle"
    with pytest.raises(InvariantViolation):
        metric.glue(X, Y, [[0], [10]])


def test_compose_records_lowest_midpoint_on_ties():
    X, Y, Z = line([0], "x"), line([0, 2], "y"), line([0], "z")
    d1 = metric.glue(X, Y, [[1, 1]])
    d2 = metric.glue(Y, Z, [[1], [1]])
    d = metric.compose(d1, d2)
    assert d.cross == ((Fraction(2),),)
    assert d.midpoint("x0", "z0") == 0


def test_compose_needs_the_same_middle():
    X, Y = line([0], "x"), line([0], "y")
    d = metric.glue(X, Y, [[1]])
    with pytest.raises(StructuralError):
        metric.compose(d, d)


def test_smallest_metric_default_basepoint():
    X, Y = line([0, 1, 2], "x", base="x1"), line([0, 3], "y")
    d = metric.smallest_metric(X, Y)
    assert d.d("x0", "y3") == 1 + 1 + 3
    assert d.d("x1", "y0") == 1


def test_smallest_metric_is_below_random_glues_pointwise():
    rng = random.Random(3)
    for _ in range(20):
        X, Y = metric.random_space(rng, 4, prefix="x"), metric.random_space(rng, 3, prefix="y")
        d = metric.random_glue(rng, X, Y)
        s = metric.smallest_metric(X, Y)
        # the bottom class has the largest cross distances up to a fixed shift
        shift = d.d(X.points[0], Y.points[0])
        for x in X.points:
            for y in Y.points:
                assert d.d(x, y) <= s.d(x, y) + shift


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(1, 5))
def test_random_glue_is_valid_and_adjoint_is_involutive(seed, nx, ny):
    rng = random.Random(seed)
    X, Y = metric.random_space(rng, nx, prefix="x"), metric.random_space(rng, ny, prefix="y")
    d = metric.random_glue(rng, X, Y)
    assert metric.check_glue(d) is None
    assert metric.adjoint(metric.adjoint(d)) == d
    assert [list(r) for r in metric.adjoint(d).cross] == oracles.transpose(d.cross)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_compose_matches_minplus_oracle(seed):
    rng = random.Random(seed)
    X, Y, Z = (metric.random_space(rng, rng.randint(1, 4), prefix=p) for p in "xyz")
    d1, d2 = metric.random_glue(rng, X, Y), metric.random_glue(rng, Y, Z)
    assert [list(r) for r in metric.compose(d1, d2).cross] == oracles.minplus(d1.cross, d2.cross)
