"""Canonical JSON encodings.

Rationals are ``[num, den]`` in lowest terms; exact complex entries carry separate
``re``/``im`` rationals.  :func:`dumps` sorts keys, so equal values always give
byte-identical text and every document re-parses to an equal value.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction

import numpy as np

from .blocks import ENTRY_CHAIN, BlockClassMatrix
from .errors import StructuralError
from .exact import QI, pair, q
from .metric import FiniteMetricSpace, GluedMetric
from .projections import GridField
from .roe import BandedOperator
from .topology import FinitePoset


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_json(path: str, obj) -> None:
    """Write atomically: a temporary file in the target directory, then rename."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(dumps(obj) + "\n")
    os.replace(tmp, path)


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise StructuralError(f"cannot read {path}: {exc}") from None


def _need(doc, *keys):
    if not isinstance(doc, dict):
        raise StructuralError(f"expected an object with keys {keys}")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise StructuralError(f"missing keys {missing}")


def _point(p):
    if isinstance(p, list):
        raise StructuralError(f"point identifiers must be strings or integers, got {p!r}")
    return p


# -- scalars and matrices ----------------------------------------------------


def enc_scalar(v):
    if isinstance(v, QI):
        return {"re": pair(v.re), "im": pair(v.im)}
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (float, np.floating)):
        return float(v)
    return pair(q(v))


def dec_scalar(v):
    if isinstance(v, dict):
        _need(v, "re", "im")
        if isinstance(v["re"], list):
            z = QI(q(v["re"]), q(v["im"]))
            return z.re if z.im == 0 else z
        return complex(v["re"], v["im"])
    if isinstance(v, float):
        return v
    return q(v)


def enc_matrix(M) -> list:
    return [[enc_scalar(x) for x in row] for row in np.asarray(M, dtype=object).tolist()]


def dec_matrix(rows) -> np.ndarray:
    vals = [[dec_scalar(x) for x in row] for row in rows]
    if any(isinstance(x, (float, complex)) for row in vals for x in row):
        return np.array(vals, dtype=complex)
    out = np.empty((len(vals), len(vals[0]) if vals else 0), dtype=object)
    for i, row in enumerate(vals):
        for j, x in enumerate(row):
            out[i, j] = x
    return out


# -- metric objects ----------------------------------------------------------


def enc_space(X: FiniteMetricSpace) -> dict:
    return {
        "points": list(X.points),
        "dist": [[pair(v) for v in row] for row in X.dist],
        "basepoint": X.basepoint,
    }


def dec_space(doc) -> FiniteMetricSpace:
    _need(doc, "points", "dist")
    pts = [_point(p) for p in doc["points"]]
    return FiniteMetricSpace(tuple(pts), [[q(v) for v in row] for row in doc["dist"]], doc.get("basepoint"))


def enc_glue(d: GluedMetric) -> dict:
    out = {"left": enc_space(d.left), "right": enc_space(d.right), "cross": [[pair(v) for v in r] for r in d.cross]}
    if d.midpoints is not None:
        out["midpoints"] = [list(r) for r in d.midpoints]
    return out


def dec_glue(doc) -> GluedMetric:
    _need(doc, "left", "right", "cross")
    mid = doc.get("midpoints")
    return GluedMetric(
        dec_space(doc["left"]),
        dec_space(doc["right"]),
        [[q(v) for v in r] for r in doc["cross"]],
        tuple(tuple(r) for r in mid) if mid is not None else None,
    )


# -- posets ------------------------------------------------------------------


def enc_poset(P: FinitePoset) -> dict:
    return {"elements": list(P.elements), "leq": [[int(v) for v in r] for r in P.leq_matrix]}


def dec_poset(doc) -> FinitePoset:
    _need(doc, "elements")
    els = [_point(e) for e in doc["elements"]]
    if "leq" in doc:
        return FinitePoset(tuple(els), doc["leq"])
    return FinitePoset.from_relation(els, [tuple(p) for p in doc.get("relation", [])])


# -- operators ---------------------------------------------------------------


def enc_operator(S: BandedOperator) -> dict:
    ents = []
    for (y, x), v in sorted(S.entries.items(), key=lambda kv: (S.codomain.index(kv[0][0]), S.domain.index(kv[0][1]))):
        if isinstance(v, QI):
            re, im = pair(v.re), pair(v.im)
        elif S.mode == "float":
            re, im = complex(v).real, complex(v).imag
        else:
            re, im = pair(v), [0, 1]
        ents.append({"y": y, "x": x, "re": re, "im": im})
    return {"domain": enc_space(S.domain), "codomain": enc_space(S.codomain), "mode": S.mode, "entries": ents}


def dec_operator(doc) -> BandedOperator:
    _need(doc, "domain", "codomain", "entries")
    mode = doc.get("mode", "exact")
    ents = {}
    for e in doc["entries"]:
        _need(e, "y", "x", "re")
        if mode == "exact":
            re, im = q(e["re"]), q(e.get("im", [0, 1]))
            ents[(e["y"], e["x"])] = re if im == 0 else QI(re, im)
        else:
            ents[(e["y"], e["x"])] = complex(e["re"], e.get("im", 0.0))
    return BandedOperator(dec_space(doc["domain"]), dec_space(doc["codomain"]), ents, mode)


# -- grid fields and block matrices -------------------------------------------


def enc_grid_field(m: GridField) -> dict:
    return {
        "grid": [pair(t) for t in m.grid],
        "values": [enc_matrix(v) for v in m.values],
        "modulus": pair(m.modulus) if m.modulus is not None else None,
    }


def dec_grid_field(doc) -> GridField:
    _need(doc, "grid", "values")
    mod = doc.get("modulus")
    return GridField(tuple(q(t) for t in doc["grid"]), tuple(dec_matrix(v) for v in doc["values"]), mod)


def enc_block(M: BlockClassMatrix) -> dict:
    out = {
        "entries": [{"i": i, "j": j, "class": c} for (i, j), c in M.entries.items()],
        "infinite_diagonal": M.infinite_diagonal,
        "bound": M.bound,
    }
    if M.poset != ENTRY_CHAIN:
        out["poset"] = enc_poset(M.poset)
    return out


def dec_block(doc) -> BlockClassMatrix:
    _need(doc, "entries")
    poset = dec_poset(doc["poset"]) if "poset" in doc else ENTRY_CHAIN
    ents = {}
    for e in doc["entries"]:
        _need(e, "i", "j")
        ents[(e["i"], e["j"])] = e.get("class", "I")
    return BlockClassMatrix(ents, poset, doc.get("bound"), bool(doc.get("infinite_diagonal", False)))


def jsonable(obj):
    """Best-effort plain-JSON view of report values (Fractions become pairs)."""
    if isinstance(obj, Fraction):
        return pair(obj)
    if isinstance(obj, (QI, complex, np.complexfloating, np.floating)):
        return enc_scalar(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return enc_matrix(obj) if obj.ndim == 2 else [jsonable(x) for x in obj.tolist()]
    if isinstance(obj, BlockClassMatrix):
        return enc_block(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [jsonable(x) for x in obj]
    return obj
