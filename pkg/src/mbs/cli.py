"""``mbs`` command-line front end.

Exit codes: 0 ok, 1 validation/parse error, 2 boundary does not square to
zero, 3 Morse-Bott inequality violated, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .mbscomplex import (
    ComplexError,
    LengthMismatch,
    assemble_boundary,
    check_blocks,
    cohomology,
    morse_bott_inequalities,
    verify_d_squared,
    witten_dims,
)
from .orbitdata import mu_table, validate_manifold
from .specdoc import (
    EXAMPLE_NAMES,
    ParseError,
    SpecDocument,
    example_text,
    format_rational,
    parse_document,
)

REPORT_VERSION = 1
EXIT_CODES = {
    "ok": 0,
    "validation_error": 1,
    "chain_error": 2,
    "inequality_violation": 3,
    "internal_error": 4,
}


@dataclass
class Report:
    command: str
    status: str
    payload: dict = field(default_factory=dict)
    text: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def machine(self) -> str:
        body = {"version": REPORT_VERSION, "command": self.command, "status": self.status,
                "payload": self.payload}
        return json.dumps(body, indent=2, sort_keys=False)


def _table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    def cell(c, w):
        return c.rjust(w) if c.lstrip("+-").replace(".", "", 1).isdigit() else c.ljust(w)

    lines = ["  ".join(cell(c, w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def resolve_document(path: str) -> tuple[SpecDocument, str]:
    """Load a spec document from disk, falling back to a bundled example.

    ``examples/s3.spec`` or ``s3`` resolves to the bundled S^3 document when
    no such file exists.
    """
    p = Path(path)
    if p.is_file():
        return parse_document(p.read_text()), str(p)
    stem = p.name[:-5] if p.name.endswith(".spec") else p.name
    if stem in EXAMPLE_NAMES:
        return parse_document(example_text(stem)), f"bundled:{stem}"
    raise FileNotFoundError(f"no such spec document: {path}")


def _load(command: str, path: str):
    """Parse and validate; returns (doc, source) or a failing Report."""
    try:
        doc, source = resolve_document(path)
    except FileNotFoundError as e:
        return Report(command, "validation_error", {"error": "IoError", "message": str(e)}, f"IoError: {e}")
    except ParseError as e:
        payload = {"error": "ParseError", "message": str(e), "field": e.field, "line": e.line}
        return Report(command, "validation_error", payload, f"ParseError: {e}")
    rep = validate_manifold(doc.spec)
    violations = [{"kind": v.kind, "message": v.message, "where": v.where} for v in rep.violations]
    if rep.accepted:
        try:
            check_blocks(doc.spec, doc.blocks)
        except ComplexError as e:
            violations.append({"kind": e.kind, "message": str(e), "where": "boundary"})
    warnings = [{"kind": v.kind, "message": v.message, "where": v.where} for v in rep.warnings]
    if violations:
        text = "\n".join(f"{v['kind']}: {v['message']}" + (f" [{v['where']}]" if v["where"] else "")
                         for v in violations)
        return Report(command, "validation_error",
                      {"source": source, "accepted": False, "violations": violations, "warnings": warnings},
                      "rejected\n" + text)
    return doc, source, warnings


def cmd_validate(path: str) -> Report:
    res = _load("validate", path)
    if isinstance(res, Report):
        return res
    doc, source, warnings = res
    spec = doc.spec
    mu = mu_table(spec)
    lines = [f"{source}: accepted (m = {spec.manifold_dim}, {len(spec.orbits)} orbits, {len(doc.blocks)} blocks)"]
    lines += [f"warning {w['kind']}: {w['message']}" for w in warnings]
    payload = {
        "source": source,
        "accepted": True,
        "violations": [],
        "warnings": warnings,
        "mu": [{"index": i, "torus_dim": j, "count": c} for (i, j), c in sorted(mu.items())],
    }
    return Report("validate", "ok", payload, "\n".join(lines))


def _chain_failure(command: str, c, check) -> Report:
    k, r, col = check.first_failure
    src, tgt = c.bases[k][col], c.bases[k + 2][r]
    payload = {"k": k, "row": r, "col": col, "value": format_rational(check.value),
               "source": str(src), "target": str(tgt)}
    text = (f"ChainError: d^{k + 1} o d^{k} != 0; entry ({r}, {col}) = {check.value} "
            f"from {src} to {tgt}")
    return Report(command, "chain_error", payload, text)


def cmd_cohomology(path: str) -> Report:
    res = _load("cohomology", path)
    if isinstance(res, Report):
        return res
    doc, source, _ = res
    c = assemble_boundary(doc.spec, doc.blocks)
    check = verify_d_squared(c)
    if not check.ok:
        return _chain_failure("cohomology", c, check)
    rep = cohomology(c, doc.spec)
    rows = [(k, len(c.bases[k]), rep.betti[k], " ".join(str(e) for e in c.bases[k]) or "-")
            for k in range(len(c.bases))]
    text = [_table(("k", "dim C^k", "beta_k", "basis"), rows),
            f"euler characteristic: {rep.euler_characteristic}"]
    if rep.matches_reference is not None:
        text.append(f"reference betti {list(doc.spec.reference_betti)}: "
                    + ("match" if rep.matches_reference else "MISMATCH"))
    payload = {
        "source": source,
        "betti": list(rep.betti),
        "chain_dims": list(rep.chain_dims),
        "euler_characteristic": rep.euler_characteristic,
        "matches_reference": rep.matches_reference,
        "bases": [[str(e) for e in b] for b in c.bases],
    }
    return Report("cohomology", "ok", payload, "\n".join(text))


def _parse_betti(csv: str) -> list[int]:
    try:
        return [int(x) for x in csv.split(",") if x.strip() != ""]
    except ValueError:
        raise ParseError(f"--betti expects comma-separated integers, got {csv!r}", "--betti") from None


def cmd_inequalities(path: str, betti: Optional[str] = None) -> Report:
    res = _load("inequalities", path)
    if isinstance(res, Report):
        return res
    doc, source, _ = res
    spec = doc.spec
    if betti is not None:
        try:
            b, origin = _parse_betti(betti), "override"
        except ParseError as e:
            return Report("inequalities", "validation_error", {"error": "ParseError", "message": str(e)}, str(e))
    elif spec.reference_betti is not None:
        b, origin = list(spec.reference_betti), "reference"
    else:
        c = assemble_boundary(spec, doc.blocks)
        check = verify_d_squared(c)
        if not check.ok:
            return _chain_failure("inequalities", c, check)
        b, origin = list(cohomology(c, spec).betti), "computed"
    try:
        rep = morse_bott_inequalities(spec, b)
    except LengthMismatch as e:
        return Report("inequalities", "validation_error",
                      {"error": "LengthMismatch", "message": str(e)}, f"LengthMismatch: {e}")
    rows = [(r.n, r.lhs, r.rhs, "yes" if r.holds else "NO") for r in rep.per_n]
    text = [f"betti ({origin}): {b}", _table(("n", "lhs", "rhs", "holds"), rows),
            f"equality at n = {spec.manifold_dim}: {rep.equality_at_top}"]
    if not rep.all_hold:
        text.append(f"violation at n = {rep.first_violation()}")
    payload = {
        "source": source,
        "betti": b,
        "betti_source": origin,
        "per_n": [{"n": r.n, "lhs": r.lhs, "rhs": r.rhs, "holds": r.holds} for r in rep.per_n],
        "equality_at_top": rep.equality_at_top,
    }
    return Report("inequalities", "ok" if rep.all_hold else "inequality_violation", payload, "\n".join(text))


def cmd_witten_dims(path: str) -> Report:
    res = _load("witten-dims", path)
    if isinstance(res, Report):
        return res
    doc, source, _ = res
    dims = witten_dims(doc.spec)
    chain = [len(b) for b in assemble_boundary(doc.spec, doc.blocks).bases]
    if dims != chain:
        return Report("witten-dims", "internal_error", {"witten_dims": dims, "chain_dims": chain},
                      f"internal error: witten dims {dims} != chain dims {chain}")
    rows = [(k, d) for k, d in enumerate(dims)]
    payload = {"source": source, "witten_dims": dims, "chain_dims": chain, "equal": True}
    return Report("witten-dims", "ok", payload,
                  _table(("k", "dim F^k"), rows) + "\nequal to chain dimensions: yes")


def cmd_flow(example: str, subcommand: str, seeds: int = 200, tol: Optional[float] = None,
             step: Optional[float] = None, upper: Optional[str] = None, samples: int = 64) -> Report:
    # flowlab pulls in sympy/scipy; keep the exact commands light
    from .flowlab import manifolds, oracle

    command = f"flow {subcommand}"
    try:
        ex = manifolds.get_example(example)
    except manifolds.UnknownExample as e:
        return Report(command, "validation_error", {"error": "UnknownExample", "message": str(e.args[0])},
                      f"UnknownExample: {e.args[0]}")
    tol = oracle.DEFAULT_TOL if tol is None else tol
    if subcommand == "critical":
        try:
            dets = oracle.find_critical_orbits(ex, seeds=seeds, tol=tol, step=step)
        except oracle.ConstantFunction as e:
            return Report(command, "validation_error",
                          {"example": ex.name, "error": "ConstantFunction", "message": str(e)},
                          f"ConstantFunction: {e}")
        det_payload = [
            {"label": d.matched_label, "f_value": d.f_value, "index": d.index,
             "gradient_norm": d.gradient_norm, "cluster_size": d.cluster_size,
             "point": [float(v) for v in d.representative_point]}
            for d in dets
        ]
        rows = [(d.matched_label or "?", f"{d.f_value:+.10f}", d.index, f"{d.gradient_norm:.1e}", d.cluster_size)
                for d in dets]
        text = f"{ex.name}: {len(dets)} critical orbits from {seeds} seeds\n" + _table(
            ("orbit", "f", "index", "|grad|", "hits"), rows)
        return Report(command, "ok", {"example": ex.name, "seeds": seeds, "tol": tol, "detections": det_payload}, text)

    if subcommand == "connections":
        if upper is None:
            return Report(command, "validation_error", {"error": "MissingUpper"}, "connections requires --upper")
        try:
            tally = oracle.connection_scan(ex, upper, samples=samples, step=step)
        except oracle.UnknownOrbit as e:
            return Report(command, "validation_error", {"error": "UnknownOrbit", "message": str(e.args[0])},
                          f"UnknownOrbit: {e.args[0]}")
        except oracle.IndexZeroOrbit as e:
            return Report(command, "validation_error", {"error": "IndexZeroOrbit", "message": str(e)},
                          f"IndexZeroOrbit: {e}")
        idx = {o.label: o.index for o in ex.analytic_orbits}
        up_idx = idx[upper]
        upward = sum(n for lab, n in tally.items() if lab in idx and idx[lab] >= up_idx)
        rows = [(lab, idx.get(lab, "-"), n) for lab, n in tally.items()]
        text = (f"{ex.name}: {samples} flow lines leaving {upper} (index {up_idx})\n"
                + _table(("terminal", "index", "count"), rows)
                + f"\nterminals with index >= {up_idx}: {upward}")
        payload = {"example": ex.name, "upper": upper, "upper_index": up_idx, "samples": samples,
                   "tally": tally, "terminals_at_or_above_upper_index": upward}
        return Report(command, "ok", payload, text)

    return Report(command, "validation_error", {"error": "UnknownSubcommand"}, f"unknown flow subcommand {subcommand!r}")


def cmd_example(name: Optional[str] = None) -> Report:
    if name is None:
        from .specdoc import example_registry

        reg = example_registry()
        rows = [(n, doc.spec.manifold_dim, len(doc.spec.orbits), note) for n, doc, note in reg]
        payload = {"examples": [{"name": n, "manifold_dim": d.spec.manifold_dim, "note": note} for n, d, note in reg]}
        return Report("example", "ok", payload, _table(("name", "m", "orbits", "note"), rows))
    try:
        text = example_text(name)
    except KeyError as e:
        return Report("example", "validation_error", {"error": "UnknownExample", "message": str(e.args[0])},
                      f"UnknownExample: {e.args[0]}")
    return Report("example", "ok", {"name": name, "document": json.loads(text)}, text.rstrip("\n"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "machine"), default="text")

    p = argparse.ArgumentParser(prog="mbs", description="Invariant Morse-Bott-Smale complex toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("validate", "check a spec document"),
                        ("cohomology", "assemble the complex and compute Betti numbers"),
                        ("witten-dims", "binomial dimension count of the instanton complex")):
        sp_ = sub.add_parser(name, parents=[common], help=help_)
        sp_.add_argument("path")
    ineq = sub.add_parser("inequalities", parents=[common], help="evaluate the Morse-Bott inequalities")
    ineq.add_argument("path")
    ineq.add_argument("--betti", help="comma-separated Betti numbers overriding the document")

    flow = sub.add_parser("flow", parents=[common], help="numeric gradient-flow oracle on built-in manifolds")
    flow.add_argument("example")
    flow.add_argument("subcommand", choices=("critical", "connections"))
    flow.add_argument("--seeds", type=int, default=200)
    flow.add_argument("--tol", type=float, default=None)
    flow.add_argument("--step", type=float, default=None)
    flow.add_argument("--upper")
    flow.add_argument("--samples", type=int, default=64)

    ex = sub.add_parser("example", parents=[common], help="list or print bundled spec documents")
    ex.add_argument("name", nargs="?")
    return p


def run(argv: Optional[Sequence[str]] = None) -> Report:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args.path)
    if args.command == "cohomology":
        return cmd_cohomology(args.path)
    if args.command == "inequalities":
        return cmd_inequalities(args.path, args.betti)
    if args.command == "witten-dims":
        return cmd_witten_dims(args.path)
    if args.command == "flow":
        return cmd_flow(args.example, args.subcommand, args.seeds, args.tol, args.step, args.upper, args.samples)
    return cmd_example(args.name)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = run(argv)
    except Exception as e:  # exit code 4 is part of the contract
        report = Report(args.command, "internal_error", {"error": type(e).__name__, "message": str(e)},
                        f"internal error: {type(e).__name__}: {e}")
    out = report.machine() if args.format == "machine" else report.text
    print(out)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
