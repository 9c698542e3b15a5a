"""Command-line entry point: ``coarsefields <group> <command> [options]``.

Every command prints one JSON report on stdout.  Exit codes: 0 success,
1 a checked property failed, 2 malformed input or usage, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import blocks, coarse, fields, io, metric, projections, roe, topology
from .errors import ArtifactError, Inconclusive, InvariantViolation, StructuralError
from .exact import q

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class Failed(Exception):
    """A command whose report records a failed check (exit 1)."""

    def __init__(self, report):
        super().__init__("check failed")
        self.report = report


def _report(anchor: str, result, ok: bool = True) -> dict:
    return {"anchor": anchor, "ok": ok, "result": io.jsonable(result)}


def _element(P: topology.FinitePoset, text: str):
    for e in P.elements:
        if str(e) == text:
            return e
    raise StructuralError(f"unknown poset element {text!r}")


def _elements(P, text: str) -> list:
    try:
        items = json.loads(text)
    except json.JSONDecodeError:
        items = [s for s in text.split(",") if s]
    if not isinstance(items, list):
        items = [items]
    return [_element(P, str(x)) for x in items]


def _clopen(s: topology.ClopenSet) -> dict:
    return {"term": topology.term_str(s.term), "carrier": sorted(map(str, s.carrier))}


# -- metric --------------------------------------------------------------------


def cmd_metric_validate(a):
    doc = io.read_json(a.input)
    if "cross" in doc:
        bad = metric.check_glue(io.dec_glue(doc))
        rep = _report("glued-metric/conditions", {"violation": bad}, bad is None)
    else:
        r = metric.validate_metric(io.dec_space(doc))
        rep = _report("metric/axioms", {"violation": r.violation}, r.ok)
    if not rep["ok"]:
        raise Failed(rep)
    return rep


def cmd_metric_glue(a):
    X, Y = io.dec_space(io.read_json(a.left)), io.dec_space(io.read_json(a.right))
    if a.cross:
        d = metric.glue(X, Y, [[q(v) for v in r] for r in io.read_json(a.cross)])
    else:
        d = metric.random_glue(random.Random(a.seed), X, Y)
    return _report("glued-metric/conditions", {"gap": d.gap}), io.enc_glue(d)


def cmd_metric_compose(a):
    d = metric.compose(io.dec_glue(io.read_json(a.left)), io.dec_glue(io.read_json(a.right)))
    return _report("min-plus/composition", {"cross": d.cross, "midpoints": d.midpoints}), io.enc_glue(d)


def cmd_metric_derive(a):
    r = metric.derived_metrics(io.dec_glue(io.read_json(a.glue)))
    payload = {"adjoint": io.enc_glue(r.adjoint), "d_r": io.enc_space(r.d_r), "d_l": io.enc_space(r.d_l)}
    return _report("derived-metrics/identity", payload), payload


def cmd_metric_compare(a):
    d1, d2 = io.dec_glue(io.read_json(a.first)), io.dec_glue(io.read_json(a.second))
    v = coarse.control_compare(d1, d2)
    rep = _report("coarse-order/control", {"kind": v.kind, "detail": v.detail})
    if v.kind == "inconclusive":
        raise Inconclusive("comparison undecided", [rep])
    return rep


def cmd_metric_smallest(a):
    X, Y = io.dec_space(io.read_json(a.left)), io.dec_space(io.read_json(a.right))
    d = metric.smallest_metric(X, Y, a.x0, a.y0)
    return _report("smallest-glue", {"gap": d.gap}), io.enc_glue(d)


# -- topology ------------------------------------------------------------------


def _poset(a):
    return io.dec_poset(io.read_json(a.poset))


def cmd_topology_subbase(a):
    P = _poset(a)
    return _report("clopen-subbase", [_clopen(s) for s in topology.subbase_sets(P)])


def cmd_topology_separate(a):
    P = _poset(a)
    U, V = topology.hausdorff_witness(P, _element(P, a.a), _element(P, a.b))
    return _report("hausdorff-witness", {"first": _clopen(U), "second": _clopen(V)})


def cmd_topology_urysohn(a):
    P = _poset(a)
    w = topology.urysohn_function(P, _elements(P, a.closed), _element(P, a.a))
    return _report("urysohn-witness", {"W": _clopen(w.W), "f": {str(k): v for k, v in w.f.items()}})


def cmd_topology_refute_cover(a):
    P = _poset(a)
    out = topology.refute_subcover(P.minimal_elements(), _elements(P, a.candidate), P)
    return _report("noncompactness-refuter", {"uncovered": out, "covered": out == "covered"})


def cmd_topology_spectrum(a):
    P = _poset(a)
    gens = None if a.generators == "all" else _elements(P, a.generators)
    sp = topology.gamma_spectrum(topology.GeneratedAlgebra.of_poset(P, gens))
    points = [
        {"bits": list(p.bits), "realized_by": p.realized_by, "limits": p.limit_labels} for p in sp.points
    ]
    return _report("gamma-spectrum", {"points": points, "order": sp.order, "fingerprint": sp.fingerprint})


# -- roe -----------------------------------------------------------------------


def _op(path):
    return io.dec_operator(io.read_json(path))


def _glue(path):
    return io.dec_glue(io.read_json(path))


def cmd_roe_prop(a):
    return _report("propagation", {"propagation": roe.propagation(_op(a.operator), _glue(a.glue))})


def cmd_roe_tro(a):
    d = _glue(a.glue)
    T, S, R = _op(a.t), _op(a.s), _op(a.r)
    product, prop = roe.tro_triple(T, S, R, d)
    parts = [roe.propagation(x, d) for x in (T, S, R)]
    return _report("tro-propagation", {"propagation": prop, "factors": parts, "bound": sum(parts)}), io.enc_operator(
        product
    )


def cmd_roe_decompose(a):
    S, d = _op(a.operator), _glue(a.glue)
    pieces = roe.decompose_finite_propagation(S, d, q(a.L))
    out = [
        {"translation": [list(m) for m in p.translation.mapping], "coefficient": {str(k): v for k, v in p.coefficient.items()}}
        for p in pieces
    ]
    bound = S.column_degree() * S.row_degree()
    return _report("partial-translation-decomposition", {"pieces": out, "count": len(pieces), "degree_bound": bound})


def cmd_roe_factor(a):
    doc = io.read_json(a.translation)
    t = roe.PartialTranslation([tuple(m) for m in doc["mapping"]], q(doc["bound"]))
    f = roe.factor_through(t, _glue(a.d1), _glue(a.d2))
    return _report(
        "product-factorization",
        {"N": f.N, "max_fiber": f.max_fiber, "parts": f.parts, "route": f.route},
    )


# -- field ---------------------------------------------------------------------


def _field_doc(path):
    """Field JSON: poset, family [{a, generators}], optional terms [{a, s}]."""
    doc = io.read_json(path)
    for key in ("poset", "family"):
        if key not in doc:
            raise StructuralError(f"field document needs {key!r}")
    P = io.dec_poset(doc["poset"])
    gens = {_element(P, str(g["a"])): [io.dec_matrix(m) for m in g["generators"]] for g in doc["family"]}
    shape = next(iter(gens.values()))[0].shape
    fam = fields.TROFamily(P.leq, gens, shape)
    m = fields.PosetFieldElement.zero(shape)
    for t in doc.get("terms", []):
        a = _element(P, str(t["a"]))
        s = io.dec_matrix(t["s"])
        if not fam.contains(a, s):
            raise StructuralError(f"term at {a!r} is not in the span of M_a")
        m = m + fields.PosetFieldElement.chi(a, s)
    return P, fam, m


def cmd_field_eval(a):
    P, fam, m = _field_doc(a.field)
    t = _element(P, a.at)
    fib = fields.fiber(fam, t)
    return _report(
        "evaluation/fiber",
        {"value": fields.evaluate(m, t, P.leq), "fiber_dimension": fib.dimension, "fiber_basis": list(fib.basis)},
    )


def cmd_field_axioms(a):
    P, fam, m = _field_doc(a.field)
    rng = random.Random(a.seed)
    A, B = fam.left_algebras(), fam.right_algebras()
    mods = [m] + [fields.random_field(rng, fam) for _ in range(a.samples)]
    left = [fields.random_field(rng, A) for _ in range(a.samples)]
    right = [fields.random_field(rng, B) for _ in range(a.samples)]
    r = fields.check_field_axioms(fam, mods, left, right, P.elements)
    rep = _report("field-axioms", r, r["ok"])
    if not r["ok"]:
        raise Failed(rep)
    return rep


def _grid(path):
    return io.dec_grid_field(io.read_json(path))


def _stab_report(r: projections.StabilizeResult) -> dict:
    return {
        "U": list(r.U),
        "inner": list(r.inner),
        "sup_error": r.sup_error,
        "idempotency": r.idempotency,
        "gram_defect": r.gram_defect,
        "defects": list(r.defects),
        "eigenvalues": [list(w) for w in r.eigenvalues],
    }


def cmd_field_stabilize(a):
    r = projections.stabilize_projection(_grid(a.grid), q(a.t0), q(a.eps))
    return _report("projection-stabilization", _stab_report(r)), io.enc_grid_field(r.n)


def cmd_field_orthogonalize(a):
    r = projections.orthogonalize_pair(_grid(a.m), _grid(a.n), q(a.t0), q(a.eps))
    payload = {"m": io.enc_grid_field(r.m), "n": io.enc_grid_field(r.n)}
    return _report("orthogonalization", {"U": list(r.U), "cross": r.cross, "gram_defect": r.gram_defect}), payload


def cmd_field_frame(a):
    r = projections.frame_extend([_grid(p) for p in a.frame], q(a.t0), q(a.eps))
    payload = {"frame": [io.enc_grid_field(e) for e in r.frame]}
    result = {"U": list(r.U), "gram_error": r.gram_error, "idempotency": r.idempotency}
    return _report("orthonormal-frame", result), payload


# -- corona --------------------------------------------------------------------


def _matrix(path):
    return io.dec_block(io.read_json(path))


def cmd_corona_validate(a):
    v = blocks.validate_block_matrix(_matrix(a.matrix))
    rep = _report("block-matrix/row-column", {"violation": v.violation}, v.ok)
    if not v.ok:
        raise Failed(rep)
    return rep


def cmd_corona_bseq(a):
    b = blocks.b_sequence(a.k)
    return _report("b-sequence", io.enc_block(b)), io.enc_block(b)


def cmd_corona_leq(a):
    v = blocks.family_leq(_matrix(a.left), _matrix(a.right))
    rep = _report("block-order/entrywise", {"verdict": v.kind, "reason": v.reason, "witness": v.witness})
    if v.kind == "inconclusive":
        raise Inconclusive(v.reason, [rep])
    return rep


def cmd_corona_phi(a):
    e = blocks.corona_phi(_matrix(a.matrix), a.margin)
    return _report("corona-point", {"value": e.value, "N": e.N, "probes": e.probes})


def cmd_corona_refute(a):
    r = blocks.refute_accumulation(_matrix(a.matrix), a.margin)
    return _report(
        "no-accumulation",
        {
            "k0": r.k0,
            "c": io.enc_block(r.c) if r.c is not None else None,
            "exceptions": r.exceptions,
            "members": r.members,
            "probes": r.probes,
        },
    )


def cmd_corona_escape(a):
    w = blocks.corona_escape_witness(_matrix(a.matrix), a.margin)
    return _report("corona-escape", {"a": io.enc_block(w.a), "phi": w.phi, "chi_at_b": w.chi_at_b, "branch": w.branch})


# -- export --------------------------------------------------------------------


def cmd_export_dot(a):
    if a.poset:
        P = _poset(a)
        marked = _elements(P, a.highlight) if a.highlight else []
        text = topology.hasse_dot(P, [topology.ClopenSet.of(("U", e), P) for e in marked])
    elif a.operator:
        text = roe.support_dot(_op(a.operator))
    else:
        raise StructuralError("export dot needs --poset or --operator")
    return _report("dot-export", {"dot": text}), text


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coarsefields", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="seed for randomized steps")
    groups = p.add_subparsers(dest="group", required=True)

    def cmd(group, name, fn, *args, out=False):
        sp = group.add_parser(name)
        for flags, kw in args:
            sp.add_argument(*flags, **kw)
        if out:
            sp.add_argument("--out", help="write the produced object here")
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized steps")
        sp.set_defaults(fn=fn)
        return sp

    def req(*flags, **kw):
        return flags, {"required": True, **kw}

    def opt(*flags, **kw):
        return flags, kw

    g = groups.add_parser("metric").add_subparsers(dest="command", required=True)
    cmd(g, "validate", cmd_metric_validate, req("--input"))
    cmd(g, "glue", cmd_metric_glue, req("--left"), req("--right"), opt("--cross"), out=True)
    cmd(g, "compose", cmd_metric_compose, req("--left"), req("--right"), out=True)
    cmd(g, "derive", cmd_metric_derive, req("--glue"), out=True)
    cmd(g, "compare", cmd_metric_compare, req("--first"), req("--second"))
    cmd(g, "smallest", cmd_metric_smallest, req("--left"), req("--right"), opt("--x0"), opt("--y0"), out=True)

    g = groups.add_parser("topology").add_subparsers(dest="command", required=True)
    cmd(g, "subbase", cmd_topology_subbase, req("--poset"))
    cmd(g, "separate", cmd_topology_separate, req("--poset"), req("--a"), req("--b"))
    cmd(g, "urysohn", cmd_topology_urysohn, req("--poset"), req("--closed"), req("--a"))
    cmd(g, "refute-cover", cmd_topology_refute_cover, req("--poset"), req("--candidate"))
    cmd(g, "spectrum", cmd_topology_spectrum, req("--poset"), opt("--generators", default="all"))

    g = groups.add_parser("roe").add_subparsers(dest="command", required=True)
    cmd(g, "prop", cmd_roe_prop, req("--operator"), req("--glue"))
    cmd(g, "tro", cmd_roe_tro, req("--t"), req("--s"), req("--r"), req("--glue"), out=True)
    cmd(g, "decompose", cmd_roe_decompose, req("--operator"), req("--glue"), req("--L"))
    cmd(g, "factor", cmd_roe_factor, req("--translation"), req("--d1"), req("--d2"))

    g = groups.add_parser("field").add_subparsers(dest="command", required=True)
    cmd(g, "eval", cmd_field_eval, req("--field"), req("--at"))
    cmd(g, "axioms", cmd_field_axioms, req("--field"), opt("--samples", type=int, default=5))
    cmd(g, "stabilize", cmd_field_stabilize, req("--grid"), req("--t0"), req("--eps"), out=True)
    cmd(g, "orthogonalize", cmd_field_orthogonalize, req("--m"), req("--n"), req("--t0"), req("--eps"), out=True)
    cmd(g, "frame", cmd_field_frame, req("--frame", nargs="+"), req("--t0"), req("--eps"), out=True)

    g = groups.add_parser("corona").add_subparsers(dest="command", required=True)
    margin = opt("--margin", type=int, default=blocks.DEFAULT_MARGIN)
    cmd(g, "validate", cmd_corona_validate, req("--matrix"))
    cmd(g, "bseq", cmd_corona_bseq, req("--k", type=int), out=True)
    cmd(g, "leq", cmd_corona_leq, req("--left"), req("--right"))
    cmd(g, "phi", cmd_corona_phi, req("--matrix"), margin)
    cmd(g, "refute", cmd_corona_refute, req("--matrix"), margin)
    cmd(g, "escape", cmd_corona_escape, req("--matrix"), margin)

    g = groups.add_parser("export").add_subparsers(dest="command", required=True)
    cmd(g, "dot", cmd_export_dot, opt("--poset"), opt("--operator"), opt("--highlight"), out=True)
    return p


def _emit(report) -> None:
    print(io.dumps(report))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        res = args.fn(args)
        report, payload = res if isinstance(res, tuple) else (res, None)
        out = getattr(args, "out", None)
        if out:
            if isinstance(payload, str):
                with open(out, "w") as fh:
                    fh.write(payload)
            else:
                io.write_json(out, payload if payload is not None else report)
        _emit(report)
        return EXIT_OK
    except Failed as exc:
        _emit(exc.report)
        return EXIT_INVARIANT
    except Inconclusive as exc:
        _emit({"ok": False, "error": "inconclusive", "message": str(exc), "probes": io.jsonable(exc.probes)})
        return EXIT_INCONCLUSIVE
    except InvariantViolation as exc:
        _emit({"ok": False, "error": type(exc).__name__, "message": str(exc), "witness": io.jsonable(exc.witness)})
        return EXIT_INVARIANT
    except ArtifactError as exc:
        _emit({"ok": False, "error": type(exc).__name__, "message": str(exc)})
        return exc.exit_code
    except AssertionError as exc:
        _emit({"ok": False, "error": "AssertionError", "message": str(exc)})
        return EXIT_INVARIANT


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
