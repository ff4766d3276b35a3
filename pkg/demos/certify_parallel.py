"""Certify a parallel three-stage method exactly, then watch the certificate break.

Run: python3 demos/certify_parallel.py
"""
from __future__ import annotations

from fractions import Fraction

from peer_astab.cli import load_document, parse_method
from peer_astab.criterion import certify, float_nontrivial_eigs
from peer_astab.peer import WeightPair, transform_weights


def show(label: str, report) -> None:
    c = report.certificate
    print(f"{label:<28} verdict={c.verdict:<22} rank={c.rank}")


def main() -> None:
    m, w = parse_method(load_document("builtin:peer3_parallel"))
    print("nodes:", [str(c) for c in m.nodes])
    print("G diagonal:", [str(m.G[i, i]) for i in range(m.s)])

    # the same weights in all three representations give the same verdict
    for form in ("hat", "original", "nordsieck"):
        show(f"{form} form", certify(m, transform_weights(m, w, form)))

    r = certify(m, transform_weights(m, w, "original"))
    ev = float_nontrivial_eigs(r.matrix, r.rank)
    print(f"nontrivial eigenvalues of the original test matrix: {ev.min():.4f} .. {ev.max():.4f}")

    # one unit off a single weight entry is enough to lose semidefiniteness
    W = w.W.copy()
    W[0, 0] -= Fraction(1)
    bad = certify(m, WeightPair(w.Z, W, "hat"))
    show("perturbed hat weights", bad)
    x = bad.certificate.witness
    print("witness x with x^T M x < 0:", [str(v) for v in x], "->", str(x @ bad.matrix @ x))


if __name__ == "__main__":
    main()
