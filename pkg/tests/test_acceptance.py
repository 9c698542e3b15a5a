"""Acceptance criteria 1-11, one test each, with the stated sizes, tolerances and time limits."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import numpy as np

import oracles
from coarsefields import blocks, fields, metric, projections, roe, topology
from coarsefields.exact import QI
from coarsefields.linalg import PROJECTION_THRESHOLD, apply_function, f_cut, op_norm


def _space(rng, lo, hi, prefix):
    return metric.random_space(rng, rng.randint(lo, hi), prefix=prefix)


# 1 -------------------------------------------------------------------------


def test_c01_minplus_associativity(criterion):
    with criterion(1, "min-plus composition is associative (200 triples, exact)", 5.0) as c:
        rng = random.Random(101)
        for _ in range(200):
            W, X, Y, Z = (_space(rng, 1, 5, p) for p in "wxyz")
            d1, d2, d3 = metric.random_glue(rng, W, X), metric.random_glue(rng, X, Y), metric.random_glue(rng, Y, Z)
            left = metric.compose(metric.compose(d1, d2), d3)
            right = metric.compose(d1, metric.compose(d2, d3))
            assert left.cross == right.cross
            assert [list(r) for r in left.cross] == oracles.triple_minplus(d1.cross, d2.cross, d3.cross)
        c.note("200/200 triples agree with each other and with the brute-force double minimum")


# 2 -------------------------------------------------------------------------


def test_c02_derived_metric_identity(criterion):
    with criterion(2, "d composed with its adjoint gives d^r off the diagonal (100 glues)", 5.0) as c:
        rng = random.Random(202)
        for _ in range(100):
            X, Y = _space(rng, 1, 6, "x"), _space(rng, 1, 6, "y")
            d = metric.random_glue(rng, X, Y)
            der = metric.derived_metrics(d)
            star = metric.adjoint(d)
            assert [list(r) for r in star.cross] == oracles.transpose(d.cross)
            expect_r = oracles.through_other_side(d.cross)
            expect_l = oracles.through_other_side(oracles.transpose(d.cross))
            via_x = metric.compose(d, star).cross  # x1 -> y -> x2
            via_y = metric.compose(star, d).cross  # y1 -> x -> y2
            for i, j in itertools.permutations(range(len(X)), 2):
                assert via_x[i][j] == der.d_r.dist[i][j] == expect_r[i][j]
            for i, j in itertools.permutations(range(len(Y)), 2):
                assert via_y[i][j] == der.d_l.dist[i][j] == expect_l[i][j]
        c.note("d^r and d^l both match the through-the-other-side minimum")


# 3 -------------------------------------------------------------------------


def _chain_instance():
    """x --L-- u --L-- v --L-- y on a line; X = {x, v}, Y = {u, y}."""
    X = metric.FiniteMetricSpace(("x", "v"), [[0, 2], [2, 0]])
    Y = metric.FiniteMetricSpace(("u", "y"), [[0, 2], [2, 0]])
    d = metric.glue(X, Y, [[1, 3], [1, 1]])
    R = roe.BandedOperator.elementary(X, Y, "u", "x")
    S = roe.BandedOperator.elementary(X, Y, "u", "v")
    T = roe.BandedOperator.elementary(X, Y, "y", "v")
    return d, T, S, R


def test_c03_tro_propagation_bound(criterion):
    with criterion(3, "propagation(T S* R) <= 3L (100 random triples + chain instance)", 10.0) as c:
        rng = random.Random(303)
        worst = Fraction(0)
        for _ in range(100):
            X, Y = _space(rng, 2, 6, "x"), _space(rng, 2, 6, "y")
            d = metric.random_glue(rng, X, Y, spread=3)
            L = rng.choice(sorted({v for row in d.cross for v in row}))
            T, S, R = (roe.random_banded(rng, d, L) for _ in range(3))
            product, prop = roe.tro_triple(T, S, R, d)
            dense = oracles.dense_product(
                oracles.dense_product(T.to_dense(), oracles.dense_adjoint(S.to_dense())), R.to_dense()
            )
            assert dense == product.to_dense()
            reach = oracles.support_reach(dense, Y.points, X.points, lambda x, y: d.d(x, y))
            assert reach == prop <= 3 * L
            if L:
                worst = max(worst, prop / L)
        d, T, S, R = _chain_instance()
        _, prop = roe.tro_triple(T, S, R, d)
        assert prop == 3 == 3 * max(roe.propagation(op, d) for op in (T, S, R))
        c.note(f"largest observed ratio prop/L = {worst}; chain instance attains 3L")


# 4 -------------------------------------------------------------------------


def test_c04_decomposition_exact(criterion):
    with criterion(4, "sum of f_i T_i reconstructs the operator, piece count within the degree bound", 10.0) as c:
        rng = random.Random(404)
        total = 0
        for _ in range(100):
            X, Y = _space(rng, 2, 6, "x"), _space(rng, 2, 6, "y")
            d = metric.random_glue(rng, X, Y, spread=3)
            L = rng.choice(sorted({v for row in d.cross for v in row}))
            S = roe.random_banded(rng, d, L, max_fiber=3, density=0.8)
            pieces = roe.decompose_finite_propagation(S, d, L)
            rebuilt: dict = {}
            for p in pieces:
                targets = [z for _, z in p.translation.mapping]
                assert len(targets) == len(set(targets))
                assert all(d.d(x, z) <= L for x, z in p.translation.mapping)
                for x, z in p.translation.mapping:
                    rebuilt[(z, x)] = rebuilt.get((z, x), 0) + p.coefficient[x]
            assert {k: v for k, v in rebuilt.items() if v} == S.entries
            assert len(pieces) <= S.column_degree() * S.row_degree()
            assert len(pieces) <= max(S.column_degree() + S.row_degree() - 1, 0)
            total += len(pieces)
        c.note(f"{total} pieces over 100 operators")


# 5 -------------------------------------------------------------------------


def test_c05_factorization(criterion):
    with criterion(5, "T = sum G_i F_i with short legs and N <= max fibre (50 translations)", 10.0) as c:
        rng = random.Random(505)
        done = 0
        while done < 50:
            X, Y, Z = (_space(rng, 2, 6, p) for p in "xyz")
            d1, d2 = metric.random_glue(rng, X, Y, spread=3), metric.random_glue(rng, Y, Z, spread=3)
            d = metric.compose(d1, d2)
            xs = rng.sample(X.points, rng.randint(1, len(X)))
            zs = rng.sample(Z.points, len(xs)) if len(xs) <= len(Z) else None
            if zs is None:
                continue
            mapping = list(zip(xs, zs))
            C = max(d.d(x, z) for x, z in mapping) + rng.choice([Fraction(1, 2), 1, 2])
            t = roe.PartialTranslation(mapping, C)
            f = roe.factor_through(t, d1, d2, d)
            T = t.operator(X, Z).to_dense()
            acc = [[Fraction(0)] * len(X) for _ in Z.points]
            for F, G in zip(f.F, f.G):
                assert roe.propagation(F, d1) < C and roe.propagation(G, d2) < C
                prod = oracles.dense_product(G.to_dense(), F.to_dense())
                acc = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(acc, prod)]
            assert acc == T
            fibre: dict = {}
            for x, y in f.route:
                z = dict(mapping)[x]
                assert d1.d(x, y) + d2.d(y, z) == d.d(x, z)
                fibre[y] = fibre.get(y, 0) + 1
            assert f.N <= max(fibre.values())
            done += 1
        c.note("50/50 factorizations exact")


# 6 -------------------------------------------------------------------------


def test_c06_topology_suite(criterion):
    with criterion(6, "posets up to 5 points: Hausdorff witnesses, discreteness, |P| spectrum points", 30.0) as c:
        counts = []
        for n in range(6):
            posets = topology.enumerate_posets(n)
            counts.append(len(posets))
            for P in posets:
                for a in P.elements:
                    assert topology.is_open(P, {a})
                for a, b in itertools.permutations(P.elements, 2):
                    U, V = topology.hausdorff_witness(P, a, b)
                    assert a in U and b in V and not (U.carrier & V.carrier)
                    for s in (U, V):
                        assert topology.is_open(P, s.carrier) and topology.is_closed(P, s.carrier)
                    if not P.leq(a, b):
                        assert U.carrier == oracles.up_set(P, a)
                sp = topology.gamma_spectrum(topology.GeneratedAlgebra.of_poset(P))
                assert len(sp.points) == len(P)
                assert sorted(e for p in sp.points for e in p.realized_by) == sorted(P.elements)
                assert all(len(p.realized_by) == 1 for p in sp.points)
        assert counts == oracles.poset_counts_oeis()
        c.note(f"poset counts {counts}")


# 7 -------------------------------------------------------------------------


def test_c07_noncompactness_refuter(criterion):
    with criterion(7, "every undersized candidate subcover misses a minimal (m <= 10, 100 samples)", 2.0) as c:
        rng = random.Random(707)
        checked = 0
        for m in range(1, 11):
            mins = [f"c{i}" for i in range(m)]
            P = topology.FinitePoset.from_relation(mins + ["top"], [(x, "top") for x in mins])
            for _ in range(100):
                cand = rng.sample(P.elements, rng.randint(0, m - 1))
                out = topology.refute_subcover(mins, cand, P)
                assert out in mins
                assert all(out not in oracles.up_set(P, a) for a in cand)
                checked += 1
        c.note(f"{checked} candidates refuted")


# 8 -------------------------------------------------------------------------


def _random_block(rng: random.Random) -> blocks.BlockClassMatrix:
    kind = rng.random()
    if kind < 0.6:
        sup = rng.sample(range(1, 9), rng.randint(0, 5))
        return blocks.diagonal({i: "I" for i in sup})
    if kind < 0.8:
        i, j = rng.sample(range(1, 6), 2)
        return blocks.BlockClassMatrix({(i, j): "I"})
    return blocks.BlockClassMatrix({}, bound=rng.randint(0, 5), infinite_diagonal=True)


def _phi_oracle(a: blocks.BlockClassMatrix) -> int:
    """Finite diagonal matrices sit below b_n for large n; nothing else does."""
    return int(a.is_diagonal() and not a.infinite_diagonal)


def test_c08_corona_suite(criterion):
    with criterion(8, "corona point: b_k values, multiplicativity, no accumulation, escape", 5.0) as c:
        for k in range(1, 11):
            e = blocks.corona_phi(blocks.b_sequence(k))
            assert (e.value, e.N) == (1, k)
            assert all(v == int(n >= k) for n, v in e.probes)
        for gap in range(1, 8):
            a = blocks.BlockClassMatrix({}, bound=gap, infinite_diagonal=True)
            e = blocks.corona_phi(a)
            assert (e.value, e.N) == (0, gap)
            assert all(v == 0 for _, v in e.probes)

        rng = random.Random(808)
        pairs = 0
        while pairs < 50:
            a, b = _random_block(rng), _random_block(rng)
            joint = blocks.corona_phi_product([a, b])
            pa, pb = blocks.corona_phi(a).value, blocks.corona_phi(b).value
            assert (pa, pb) == (_phi_oracle(a), _phi_oracle(b))
            assert joint.value == pa * pb
            pairs += 1

        for _ in range(20):
            cand = _random_block(rng)
            r = blocks.refute_accumulation(cand)
            assert set(r.members) <= set(r.exceptions) and len(r.exceptions) < 1000
            for k in range(1, cand.bound + 17):
                bk = blocks.b_sequence(k)
                inside = (
                    _phi_oracle(cand)
                    and oracles.chain_diag_leq(cand, bk)
                    and (r.c is None or not oracles.chain_diag_leq(r.c, bk))
                )
                assert bool(inside) == (k in r.members)

        escapes = 0
        for sup in oracles.all_subsets(range(1, 9)):
            b = blocks.diagonal({i: "I" for i in sup})
            w = blocks.corona_escape_witness(b)
            assert w.phi == _phi_oracle(w.a)
            assert w.chi_at_b == int(oracles.chain_diag_leq(w.a, b))
            assert w.phi != w.chi_at_b
            escapes += 1
        c.note(f"{pairs} product pairs, 20 refutations, {escapes} escape witnesses")


# 9 -------------------------------------------------------------------------


def _dip_field(t0):
    return projections.GridField.sample(
        lambda t: np.array([[np.sqrt(float(max(Fraction(0), 1 - 4 * abs(t - t0))))]]), 101
    )


def _diag_field():
    return projections.GridField.sample(lambda t: np.diag([1.0, np.sqrt(float(t))]), 101)


def test_c09_projection_stabilization(criterion):
    with criterion(9, "stabilize_projection on 101 nodes: exact U, f(a) idempotent, anchored, within eps", 5.0) as c:
        eps = Fraction(1, 5)
        t0 = Fraction(1, 2)
        m = _dip_field(t0)
        exact = oracles.scalar_defects_dip(m.grid, t0)
        cases = [(m, t0, exact), (_diag_field(), Fraction(0), [max(Fraction(0), t - t * t) for t in _diag_field().grid])]
        for field, s0, defects in cases:
            i0 = field.index(s0)
            r = projections.stabilize_projection(field, s0, eps)
            assert r.U == oracles.component([d < PROJECTION_THRESHOLD for d in defects], i0)
            for i in range(r.U[0], r.U[1] + 1):
                a = field.values[i] @ field.values[i].conj().T
                fa = apply_function(f_cut, a)
                assert op_norm(fa - fa @ fa) < 1e-9
            assert np.array_equal(r.n.values[i0], field.values[i0])
            assert r.sup_error < float(eps)
            for i in range(r.inner[0], r.inner[1] + 1):
                nn = r.n.values[i] @ r.n.values[i].conj().T
                assert op_norm(nn - nn @ nn) < 1e-9
            c.note(f"U={r.U} inner={r.inner} sup={r.sup_error:.3f}")


# 10 ------------------------------------------------------------------------


def _rotation_frame():
    def e1(t):
        th = float(t)
        return np.array([[np.cos(th), np.sin(th), 0.0]])

    def e2(t):
        th = float(t)
        return np.array([[-np.sin(th), np.cos(th), 0.0]]) + float(t) * np.array([[0.3, 0.0, 0.4]])

    return projections.GridField.sample(e1, 101), projections.GridField.sample(e2, 101)


def test_c10_orthogonalization_and_frames(criterion):
    with criterion(10, "orthogonalize_pair and frame_extend (k=2, 3-dim fibres) to 1e-9 on U", 10.0) as c:
        m, n = _rotation_frame()
        r = projections.orthogonalize_pair(m, n, 0, Fraction(1, 5))
        assert r.U[1] > r.U[0]
        for i in range(r.U[0], r.U[1] + 1):
            assert op_norm(r.m.values[i] @ r.n.values[i].conj().T) < 1e-9
            # closed form: Gram-Schmidt of the rotated pair
            u = m.values[i] / np.linalg.norm(m.values[i])
            w = n.values[i] - (n.values[i] @ u.conj().T) @ u
            w = w / np.linalg.norm(w)
            assert np.abs(r.n.values[i] - w).max() < 1e-9
        assert np.array_equal(r.m.values[0], m.values[0]) and np.array_equal(r.n.values[0], n.values[0])
        f = projections.frame_extend([m, n], 0, Fraction(1, 5))
        for i in range(f.U[0], f.U[1] + 1):
            es = [e.values[i] for e in f.frame]
            gram = np.array([[(x @ y.conj().T)[0, 0] for y in es] for x in es])
            assert np.abs(gram - np.eye(2)).max() < 1e-9
            p = sum(e.conj().T @ e for e in es)
            assert op_norm(p - p @ p) < 1e-9
        c.note(f"pair U={r.U} cross={r.cross:.1e}; frame U={f.U} gram={f.gram_error:.1e} idem={f.idempotency:.1e}")


# 11 ------------------------------------------------------------------------


def _manual_eval(m: fields.PosetFieldElement, t, leq):
    out = np.empty(m.shape, dtype=object)
    out.fill(Fraction(0))
    for S, s in m.terms:
        if all(leq(a, t) for a in S):
            out = out + s
    return out


def _random_chain_supports(rng, P, dim):
    """Row and column sets that grow along the order (unions over lower elements)."""
    base = {a: ({rng.randrange(dim)}, {rng.randrange(dim)}) for a in P.elements}
    return {
        a: (
            set().union(*(base[b][0] for b in P.elements if P.leq(b, a))),
            set().union(*(base[b][1] for b in P.elements if P.leq(b, a))),
        )
        for a in P.elements
    }


def test_c11_field_axioms(criterion):
    with criterion(11, "field identities exact on 100 samples; norm continuity along b_k", 10.0) as c:
        rng = random.Random(1111)
        posets = [P for n in (1, 2, 3) for P in topology.enumerate_posets(n)]
        for k in range(100):
            P = rng.choice(posets)
            dim = 2 if k % 2 else 3
            fam = fields.corner_family(P.leq, _random_chain_supports(rng, P, dim), (dim, dim))
            assert not fam.compatibility_violations() and not fam.tro_violations()
            A, B = fam.left_algebras(), fam.right_algebras()
            mods = [fields.random_field(rng, fam, 2) for _ in range(2)]
            left, right = [fields.random_field(rng, A, 2)], [fields.random_field(rng, B, 2)]
            rep = fields.check_field_axioms(fam, mods, left, right, P.elements)
            assert rep["ok"], rep["failures"]
            for t in P.elements:
                for x in mods + left + right:
                    assert fields.mat_equal(fields.evaluate(x, t, P.leq), _manual_eval(x, t, P.leq))
                am = left[0] @ mods[0]
                rhs = _manual_eval(left[0], t, P.leq) @ _manual_eval(mods[0], t, P.leq)
                assert fields.mat_equal(fields.evaluate(am, t, P.leq), rhs)

        s = fields.exact_matrix([[1, 2], [0, QI(0, 1)]])
        b1 = blocks.b_sequence(1)
        fam = fields.TROFamily(blocks.block_order, {b1: [s]}, (2, 2))
        m = fields.PosetFieldElement.chi(b1, s)
        corona = blocks.corona_point([b1])
        seq = [blocks.b_sequence(k) for k in range(1, 21)]
        rep = fields.check_field_axioms(fam, [m], [], [], [], sequences=[(m, seq, corona)])
        assert rep["ok"] and rep["continuity"][0]["tail"] == [0.0] * 5
        norm_s = op_norm(np.array(s, dtype=complex))
        assert all(abs(op_norm(np.array(fields.evaluate(m, t, blocks.block_order), dtype=complex)) - norm_s) < 1e-12 for t in seq)
        c.note("100 samples exact; continuity tail deviation 0")
