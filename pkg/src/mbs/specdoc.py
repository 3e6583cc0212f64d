"""Reading and writing ``.spec`` documents.

A document is JSON. Rationals are strings ``"p/q"`` (or ``"p"``) so that
they survive serialization exactly; multi-indices are sorted integer arrays.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from .exactlin import QMatrix
from .mbscomplex import BoundaryBlock, orbit_form_basis
from .orbitdata import CriticalOrbit, GeneratorAction, ManifoldSpec

SCHEMA_VERSION = 1
_RATIONAL = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


class ParseError(ValueError):
    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        ctx = []
        if line is not None:
            ctx.append(f"line {line}")
        if field:
            ctx.append(field)
        super().__init__(f"{message} ({', '.join(ctx)})" if ctx else message)
        self.field = field
        self.line = line


@dataclass(frozen=True)
class SpecDocument:
    spec: ManifoldSpec
    blocks: tuple[BoundaryBlock, ...] = ()
    name: str = ""
    note: str = ""


def parse_rational(s, field: str = "") -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise ParseError(f"expected rational string 'p/q', got {s!r}", field)
    if isinstance(s, int):
        return Fraction(s)
    mt = _RATIONAL.match(s)
    if not mt:
        raise ParseError(f"malformed rational {s!r}", field)
    p, q = int(mt.group(1)), int(mt.group(2) or 1)
    if q == 0:
        raise ParseError(f"zero denominator in {s!r}", field)
    return Fraction(p, q)


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _get(d: dict, key: str, field: str, types, default=...):
    if key not in d:
        if default is not ...:
            return default
        raise ParseError(f"missing key {key!r}", field)
    v = d[key]
    if isinstance(v, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ParseError(f"{key!r} has wrong type", f"{field}.{key}" if field else key)
    if not isinstance(v, types):
        raise ParseError(f"{key!r} has wrong type {type(v).__name__}", f"{field}.{key}" if field else key)
    return v


def _parse_int(v, field: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"expected integer, got {v!r}", field)
    return v


def _parse_generator(g, field: str) -> GeneratorAction:
    if not isinstance(g, dict):
        raise ParseError("generator must be an object", field)
    du = _parse_int(_get(g, "du", field, int), f"{field}.du")
    ds = _parse_int(_get(g, "ds", field, int), f"{field}.ds")
    try:
        return GeneratorAction(
            du, ds, g.get("unstable_matrix"), g.get("stable_matrix")
        )
    except (ValueError, TypeError) as e:
        raise ParseError(str(e), field) from None


def _parse_multi_index(v, n: int, field: str) -> tuple[int, ...]:
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise ParseError("multi-index must be an integer array", field)
    t = tuple(v)
    if list(t) != sorted(set(t)) or any(x < 1 or x > n for x in t):
        raise ParseError(f"multi-index {list(t)} must be strictly increasing within 1..{n}", field)
    return t


def parse_document(text: str) -> SpecDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from None
    if not isinstance(raw, dict):
        raise ParseError("document must be a JSON object")
    version = _parse_int(_get(raw, "schema_version", "", int), "schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version}", "schema_version")
    m = _parse_int(_get(raw, "manifold_dim", "", int), "manifold_dim")

    orbits = []
    for i, o in enumerate(_get(raw, "orbits", "", list)):
        field = f"orbits[{i}]"
        if not isinstance(o, dict):
            raise ParseError("orbit must be an object", field)
        label = _get(o, "label", field, str)
        n = _parse_int(_get(o, "torus_dim", field, int), f"{field}.torus_dim")
        idx = _parse_int(_get(o, "index", field, int), f"{field}.index")
        fv = parse_rational(_get(o, "f_value", field, (str, int)), f"{field}.f_value")
        gens = [
            _parse_generator(g, f"{field}.generators[{j}]")
            for j, g in enumerate(_get(o, "generators", field, list))
        ]
        try:
            orbits.append(CriticalOrbit(label, n, idx, fv, tuple(gens)))
        except ValueError as e:
            raise ParseError(str(e), field) from None

    ref = raw.get("reference_betti")
    if ref is not None:
        if not isinstance(ref, list):
            raise ParseError("reference_betti must be an integer array", "reference_betti")
        ref = tuple(_parse_int(b, f"reference_betti[{i}]") for i, b in enumerate(ref))
    spec = ManifoldSpec(m, tuple(orbits), ref)

    dims = {o.label: o.torus_dim for o in orbits}
    blocks = []
    for i, b in enumerate(_get(raw, "boundary", "", list, default=[])):
        field = f"boundary[{i}]"
        if not isinstance(b, dict):
            raise ParseError("boundary block must be an object", field)
        upper = _get(b, "upper", field, str)
        lower = _get(b, "lower", field, str)
        for lab, key in ((upper, "upper"), (lower, "lower")):
            if lab not in dims:
                raise ParseError(f"UnknownOrbit {lab!r}", f"{field}.{key}")
        rows, cols = orbit_form_basis(dims[upper]), orbit_form_basis(dims[lower])
        mat = [[Fraction(0)] * len(cols) for _ in rows]
        for j, e in enumerate(_get(b, "entries", field, list)):
            ef = f"{field}.entries[{j}]"
            if not isinstance(e, dict):
                raise ParseError("entry must be an object", ef)
            r = _parse_multi_index(_get(e, "row_index", ef, list), dims[upper], f"{ef}.row_index")
            c = _parse_multi_index(_get(e, "col_index", ef, list), dims[lower], f"{ef}.col_index")
            mat[rows.index(r)][cols.index(c)] = parse_rational(_get(e, "value", ef, (str, int)), f"{ef}.value")
        blocks.append(BoundaryBlock(upper, lower, QMatrix.from_rows(mat, len(cols))))

    return SpecDocument(spec, tuple(blocks), str(raw.get("name", "")), str(raw.get("note", "")))


def load_document(path) -> SpecDocument:
    return parse_document(Path(path).read_text())


def _generator_record(g: GeneratorAction) -> dict:
    rec = {"du": g.det_unstable_sign, "ds": g.det_stable_sign}
    if g.unstable_matrix is not None:
        rec["unstable_matrix"] = [list(r) for r in g.unstable_matrix]
    if g.stable_matrix is not None:
        rec["stable_matrix"] = [list(r) for r in g.stable_matrix]
    return rec


def document_to_dict(doc: SpecDocument) -> dict:
    spec = doc.spec
    out: dict = {"schema_version": SCHEMA_VERSION}
    if doc.name:
        out["name"] = doc.name
    if doc.note:
        out["note"] = doc.note
    out["manifold_dim"] = spec.manifold_dim
    out["orbits"] = [
        {
            "label": o.label,
            "torus_dim": o.torus_dim,
            "index": o.index,
            "f_value": format_rational(o.f_value),
            "generators": [_generator_record(g) for g in o.generators],
        }
        for o in spec.orbits
    ]
    dims = {o.label: o.torus_dim for o in spec.orbits}
    out["boundary"] = []
    for b in doc.blocks:
        rows, cols = orbit_form_basis(dims[b.upper_label]), orbit_form_basis(dims[b.lower_label])
        out["boundary"].append({
            "upper": b.upper_label,
            "lower": b.lower_label,
            "entries": [
                {"row_index": list(rows[r]), "col_index": list(cols[c]), "value": format_rational(v)}
                for r, c, v in b.raw_matrix.nonzero()
            ],
        })
    if spec.reference_betti is not None:
        out["reference_betti"] = list(spec.reference_betti)
    return out


def serialize_document(doc: SpecDocument) -> str:
    """Canonical text form: fixed key order, two-space indent, trailing newline."""
    return json.dumps(document_to_dict(doc), indent=2) + "\n"


# -- bundled examples ---------------------------------------------------------

EXAMPLE_NAMES = ("t2", "s2xs1", "s2xt2", "s3")


def example_text(name: str) -> str:
    if name not in EXAMPLE_NAMES:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(EXAMPLE_NAMES)}")
    return resources.files("mbs").joinpath("specs", f"{name}.spec").read_text()


def example_registry() -> list[tuple[str, SpecDocument, str]]:
    out = []
    for name in EXAMPLE_NAMES:
        doc = parse_document(example_text(name))
        out.append((name, doc, doc.note))
    return out
