"""``peer-astab`` command line: verify, construct, reconstruct, parallel, sample.

Files are JSON documents whose scalars are strings in the scalar grammar
(``"20/29"``, ``"207/500+3/100*sqrt(65)"``) so exactness survives the round
trip. Any file argument may also be ``builtin:NAME`` for a shipped fixture.

Exit codes: 0 success, 1 negative result, 2 input error, 3 algorithmic failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .criterion import CertificationError, certify, construct_general
from .designer import (
    CompactForm,
    DesignError,
    parallel_rank_check,
    reconstruct_diag,
    recover_node_polynomial,
)
from .linalg import LinAlgError, as_exact, eye
from .maps import preimage_P
from .peer import PeerMethod, WeightPair, assemble_order_sm1, transform_weights
from .scalar import FieldSpec, ScalarParseError, parse_scalar, render_scalar
from .validate import SampleGrid, default_grid, sample_spectral_radius, write_csv

log = logging.getLogger("peer_astab")

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_FAILURE = 0, 1, 2, 3


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------
# documents


def builtin_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("peer_astab.data").iterdir()
                  if p.name.endswith(".json"))


def load_document(ref: str) -> dict:
    try:
        if ref.startswith("builtin:"):
            name = ref.split(":", 1)[1]
            text = resources.files("peer_astab.data").joinpath(f"{name}.json").read_text()
        else:
            text = Path(ref).read_text()
    except (FileNotFoundError, IsADirectoryError) as exc:
        raise InputError(f"cannot read {ref}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{ref} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{ref}: top level must be an object")
    return doc


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256_of(doc) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def _field(doc) -> FieldSpec:
    try:
        return FieldSpec.parse(doc.get("field", "rational"))
    except (ValueError, AttributeError) as exc:
        raise InputError(f"bad field spec: {exc}") from exc


def _scalar(text, field: FieldSpec):
    try:
        return parse_scalar(text, field)
    except ScalarParseError as exc:
        raise InputError(str(exc)) from exc


def parse_vector(items, field: FieldSpec) -> list:
    if not isinstance(items, list):
        raise InputError("expected a list of scalars")
    return [_scalar(x, field) for x in items]


def parse_matrix(rows, field: FieldSpec, n: int | None = None) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("matrices are lists of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError("ragged matrix")
    if n is not None and (len(rows) != n or width != n):
        raise InputError(f"expected a {n}x{n} matrix, got {len(rows)}x{width}")
    vals = [[_scalar(x, field) for x in r] for r in rows]
    if field.exact:
        return as_exact(vals)
    return np.array(vals, dtype=float)


def render_matrix(M) -> list:
    return [[render_scalar(x) for x in row] for row in np.asarray(M)]


def parse_method(doc: dict):
    """``(PeerMethod, WeightPair | None)`` from a method document."""
    field = _field(doc)
    if "nodes" not in doc or "G" not in doc:
        raise InputError("method file needs 'nodes' and 'G'")
    nodes = parse_vector(doc["nodes"], field)
    s = len(nodes)
    if "s" in doc and doc["s"] != s:
        raise InputError(f"s = {doc['s']} but {s} nodes given")
    G = parse_matrix(doc["G"], field, s)
    try:
        if "B" in doc:
            A = parse_matrix(doc["A"], field, s) if "A" in doc else None
            m = PeerMethod(nodes, G, parse_matrix(doc["B"], field, s), A)
        else:
            if "A" in doc:
                raise InputError("A given without B")
            m = assemble_order_sm1(nodes, G)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    w = None
    if doc.get("weights") is not None:
        wd = doc["weights"]
        try:
            w = WeightPair(parse_matrix(wd["Z"], field, s), parse_matrix(wd["W"], field, s),
                           wd.get("representation", "original"))
        except KeyError as exc:
            raise InputError(f"weights need Z and W: missing {exc}") from exc
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return m, w


def method_document(m: PeerMethod, w: WeightPair | None = None, **extra) -> dict:
    doc = {
        "format": "peer-astab/method",
        "s": m.s,
        "field": str(m.field),
        "nodes": [render_scalar(x) for x in m.nodes],
        "G": render_matrix(m.G),
        "B": render_matrix(m.B),
    }
    if w is not None:
        doc["weights"] = {"representation": w.representation, "Z": render_matrix(w.Z),
                          "W": render_matrix(w.W)}
    doc.update(extra)
    return doc


def parse_compact(doc: dict, c1=None, cs=None) -> CompactForm:
    """Compact form: ``E_check`` plus ``X_check`` or a slack block with kernel anchors."""
    field = _field(doc)
    if "E_check" not in doc:
        raise InputError("compact file needs 'E_check'")
    E = parse_matrix(doc["E_check"], field)
    s = E.shape[0]
    if E.shape[1] != s:
        raise InputError("E_check must be square")
    if "X_check" in doc:
        X = parse_matrix(doc["X_check"], field, s)
    elif "slack" in doc:
        sl = doc["slack"]
        block = parse_matrix(sl.get("block", [["0"]]), field)
        kern = parse_vector(sl.get("kernel", []), field)
        k = block.shape[0]
        N = np.zeros((s, s)) if not field.exact else as_exact([[0] * s] * s)
        N[s - k:, s - k:] = block
        try:
            X = preimage_P(E, N, kern or None).X
        except (LinAlgError, ValueError) as exc:
            raise InputError(f"slack specification: {exc}") from exc
    else:
        X = np.zeros((s, s)) if not field.exact else as_exact([[0] * s] * s)
    c1 = c1 if c1 is not None else doc.get("c1", "-1")
    cs = cs if cs is not None else doc.get("cs", "1")
    try:
        return CompactForm(E, X, _scalar(c1, field), _scalar(cs, field))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _write(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# verify


def certificate_document(doc: dict, report) -> dict:
    c = report.certificate
    return {
        "format": "peer-astab/certificate",
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "input": doc,
        "input_sha256": sha256_of(doc),
        "form": report.form,
        "verdict": c.verdict,
        "a_stable": report.a_stable,
        "rank": c.rank,
        "block_defect": report.block_defect,
        "permutation": list(c.permutation),
        "pivots": [render_scalar(p) for p in c.pivots],
        "witness": None if c.witness is None else [render_scalar(x) for x in c.witness],
        "Z_verdict": report.z_certificate.verdict,
        "W_verdict": report.w_certificate.verdict,
        "warnings": list(report.warnings),
    }


_COMPARED = ("form", "verdict", "a_stable", "rank", "block_defect", "permutation", "pivots",
             "witness", "Z_verdict", "W_verdict")


def _certify_document(doc: dict, form: str):
    m, w = parse_method(doc)
    if w is None:
        raise InputError("method file has no weights to certify")
    if form != "auto" and form != w.representation:
        try:
            w = transform_weights(m, w, form)
        except LinAlgError as exc:
            raise InputError(f"cannot transform weights to {form}: {exc}") from exc
    return certify(m, w)


def cmd_verify(args) -> int:
    doc = load_document(args.file)
    if args.recheck:
        return _recheck(doc)
    report = _certify_document(doc, args.form)
    cert = certificate_document(doc, report)
    if args.report:
        _write(cert, args.report)
    c = report.certificate
    print(f"verdict={c.verdict} rank={c.rank} form={report.form} a_stable={report.a_stable}")
    if c.witness is not None:
        print("witness=" + ",".join(cert["witness"]))
    return EXIT_OK if report.a_stable else EXIT_NEGATIVE


def _recheck(cert: dict) -> int:
    if cert.get("format") != "peer-astab/certificate":
        raise InputError("--recheck expects a certificate file")
    doc = cert.get("input")
    if not isinstance(doc, dict):
        raise InputError("certificate lacks the embedded input")
    if sha256_of(doc) != cert.get("input_sha256"):
        print("recheck: input hash mismatch")
        return EXIT_NEGATIVE
    fresh = certificate_document(doc, _certify_document(doc, cert.get("form", "auto")))
    diff = [k for k in _COMPARED if canonical_json(fresh[k]) != canonical_json(cert.get(k))]
    if diff:
        print("recheck: mismatch in " + ", ".join(diff))
        return EXIT_NEGATIVE
    print(f"recheck: identical ({len(fresh['pivots'])} pivots, verdict {fresh['verdict']})")
    return EXIT_OK


# --------------------------------------------------------------------------
# construct


def cmd_construct(args) -> int:
    field = FieldSpec("rational")
    nodes = [_scalar(x.strip(), field) for x in args.nodes.split(",") if x.strip()]
    s = len(nodes)
    if s == 0:
        raise InputError("--nodes is empty")
    if args.seed_W == "identity":
        W0 = eye(s)
    else:
        sd = load_document(args.seed_W)
        W0 = parse_matrix(sd.get("matrix"), _field(sd), s)
    try:
        m, w = construct_general(nodes, W0)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report = certify(m, w)
    if not report.a_stable:  # pragma: no cover - contradicts the construction
        log.error("constructed method failed self verification")
        return EXIT_FAILURE
    _write(method_document(m, w, description="constructed from a positive definite seed"),
           args.out)
    print(f"constructed s={s} method; self-verified rank={report.rank}")
    return EXIT_OK


# --------------------------------------------------------------------------
# reconstruct


def cmd_reconstruct(args) -> int:
    doc = load_document(args.file)
    cf = parse_compact(doc, args.c1, args.cs)
    try:
        rec = reconstruct_diag(cf)
    except (ValueError, DesignError, LinAlgError) as exc:
        log.error("reconstruction failed: %s", exc)
        return EXIT_FAILURE
    diag = {k: (v if not isinstance(v, (np.floating, float)) else float(v))
            for k, v in rec.diagnostics.items()}
    diag["eta"] = rec.eta
    out = method_document(rec.method, rec.weights, diagnostics=diag)
    _write(out, args.out)
    print(f"eta={rec.eta!r} nodes=" + ",".join(repr(float(c)) for c in rec.nodes))
    return EXIT_OK


# --------------------------------------------------------------------------
# parallel


def _gtilde(doc: dict) -> np.ndarray:
    field = _field(doc)
    key = "Gtilde" if "Gtilde" in doc else "matrix"
    if key not in doc:
        raise InputError("matrix file needs 'Gtilde' or 'matrix'")
    M = parse_matrix(doc[key], field)
    if M.shape[0] != M.shape[1]:
        raise InputError("Gtilde must be square")
    return M


def cmd_parallel(args) -> int:
    Gt = _gtilde(load_document(args.file))
    chk = parallel_rank_check(Gt)
    if args.action == "check":
        state = "pass-degenerate" if chk.degenerate else ("pass" if chk.passes else "fail")
        print(f"{state} rank={chk.residual_rank}")
        if chk.degenerate:
            log.warning("Gt is a multiple of the identity; the rank test carries no information")
        return EXIT_OK if chk.passes else EXIT_NEGATIVE
    if not chk.passes:
        print(f"fail rank={chk.residual_rank}")
        return EXIT_NEGATIVE
    try:
        poly = recover_node_polynomial(Gt)
    except DesignError as exc:
        log.error("%s", exc)
        return EXIT_FAILURE
    print("p=" + ",".join(render_scalar(x) for x in poly.p))
    if poly.exact_roots is not None and len(poly.exact_roots) == Gt.shape[0]:
        print("nodes=" + ",".join(render_scalar(x) for x in poly.exact_roots))
    else:
        print("nodes=" + ",".join(repr(complex(r)) if abs(r.imag) > 1e-12 else repr(float(r.real))
                                  for r in poly.roots))
    return EXIT_OK


# --------------------------------------------------------------------------
# sample


def cmd_sample(args) -> int:
    try:
        grid = SampleGrid.parse(args.grid) if args.grid else default_grid()
    except ValueError as exc:
        raise InputError(f"bad --grid: {exc}") from exc
    if len(grid) == 0:
        raise InputError("--grid has no points")
    m, _ = parse_method(load_document(args.file))
    try:
        rep = sample_spectral_radius(m, grid)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.csv:
        write_csv(rep, args.csv)
    print(f"max_spectral_radius={rep.max_spectral_radius!r} argmax_z={rep.argmax_z!r} "
          f"samples={len(rep.samples)} skipped={rep.skipped}")
    return EXIT_OK if rep.within() else EXIT_NEGATIVE


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="peer-astab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="certify A-stability of a method with weights")
    v.add_argument("file")
    v.add_argument("--form", choices=("auto", "original", "hat", "nordsieck"), default="auto")
    v.add_argument("--report", help="write a certificate file")
    v.add_argument("--recheck", action="store_true", help="FILE is a certificate; recompute it")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("construct", help="construct a certified method from nodes and a seed")
    c.add_argument("--nodes", required=True, help="comma separated rationals")
    c.add_argument("--seed-W", dest="seed_W", default="identity", help="'identity' or a matrix file")
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    r = sub.add_parser("reconstruct", help="rebuild a diagonally implicit method from a compact form")
    r.add_argument("file")
    r.add_argument("--c1")
    r.add_argument("--cs")
    r.add_argument("--out")
    r.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("parallel", help="rank test and node recovery for V^-1 G V")
    p.add_argument("action", choices=("check", "nodes"))
    p.add_argument("file")
    p.set_defaults(func=cmd_parallel)

    s = sub.add_parser("sample", help="sample the spectral radius of M(z) on the left half plane")
    s.add_argument("file")
    s.add_argument("--grid", help="'a:b:n,c:d:m[,e:f:k]' (real, imaginary, boundary axes)")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_sample)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (InputError, CertificationError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except LinAlgError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
