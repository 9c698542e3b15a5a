import itertools
import random

import pytest

import oracles
from coarsefields import topology
from coarsefields.errors import Inconclusive, PreconditionError, StructuralError


def vee():
    # 0 and 1 minimal, both below 2
    return topology.FinitePoset.from_relation([0, 1, 2], [(0, 2), (1, 2)])


def test_poset_validation():
    with pytest.raises(StructuralError):
        topology.FinitePoset((0, 1), [[1, 1], [1, 1]])
    with pytest.raises(StructuralError):
        topology.FinitePoset((0, 1, 2), [[1, 1, 0], [0, 1, 1], [0, 0, 1]])


def test_subbase_and_neighbourhoods():
    P = vee()
    subs = {str(s): s.carrier for s in topology.subbase_sets(P)}
    assert subs["U_0"] == {0, 2} and subs["V_0"] == {1}
    for a in P.elements:
        assert topology.basic_neighbourhood(P, a) == {a}


def test_hausdorff_cases():
    P = topology.FinitePoset.chain(3)
    U, V = topology.hausdorff_witness(P, 2, 0)
    assert (str(U), str(V)) == ("U_2", "V_2")
    U, V = topology.hausdorff_witness(P, 0, 2)
    assert (str(U), str(V)) == ("V_2", "U_2")


def test_urysohn_separates_point_from_closed_set():
    P = topology.FinitePoset.chain(4)
    w = topology.urysohn_function(P, {2, 3}, 1)
    assert w(1) == 1 and w(2) == 0 and w(3) == 0
    with pytest.raises(PreconditionError):
        topology.urysohn_function(P, {1}, 1)


def test_urysohn_exhaustive_small():
    for P in topology.enumerate_posets(4):
        for a in P.elements:
            rest = [b for b in P.elements if b != a]
            for F in oracles.all_subsets(rest):
                w = topology.urysohn_function(P, F, a)
                assert w(a) == 1 and all(w(b) == 0 for b in F)


def test_refuter_and_preconditions():
    P = vee()
    assert topology.refute_subcover([0, 1], [0], P) == 1
    assert topology.refute_subcover([0, 1], [0, 1], P) == "covered"
    with pytest.raises(PreconditionError):
        topology.refute_subcover([0, 2], [], P)


def test_spectrum_with_limit_witness():
    # the half-line N with generators chi_0..chi_3 and the sequence n -> n
    N = list(range(12))
    alg = topology.GeneratedAlgebra(
        (0, 1, 2), N, lambda a, b: a <= b, (topology.LimitWitness("n", lambda n: n, 3, 8),)
    )
    sp = topology.gamma_spectrum(alg)
    assert len(sp.points) == 3
    top = sp.points[-1]
    assert top.bits == (1, 1, 1) and "n" in top.limit_labels and 2 in top.realized_by


def test_limit_signature_must_stabilize():
    alg = topology.GeneratedAlgebra((0,), (0, 1), lambda a, b: a == b)
    w = topology.LimitWitness("alt", lambda n: n % 2, 0, 4)
    with pytest.raises(Inconclusive):
        topology.limit_signature(alg, w)


def test_spectrum_order_is_extended_order():
    P = vee()
    sp = topology.gamma_spectrum(topology.GeneratedAlgebra.of_poset(P))
    for (i, p), (j, r) in itertools.product(enumerate(sp.points), repeat=2):
        a, b = p.realized_by[0], r.realized_by[0]
        assert sp.order[i][j] == P.leq(a, b)


def test_enumeration_counts_and_dot():
    assert [len(topology.enumerate_posets(n)) for n in range(6)] == oracles.poset_counts_oeis()
    dot = topology.hasse_dot(topology.FinitePoset.chain(2))
    assert '"0" -> "1"' in dot


def test_random_posets_keep_clopen_terms_consistent():
    rng = random.Random(5)
    for P in rng.sample(topology.enumerate_posets(5), 10):
        for s in topology.subbase_sets(P):
            assert s.check(P)
            assert s.complement(P).carrier == frozenset(P.elements) - s.carrier
