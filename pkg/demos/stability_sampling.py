"""Cross-check exact verdicts by sampling rho(M(z)) over the left half plane.

Run: python3 demos/stability_sampling.py [out.csv]
"""
from __future__ import annotations

import sys

from peer_astab.cli import load_document, parse_method
from peer_astab.validate import sample_spectral_radius, weighted_norm_bound, write_csv, zero_stability


def main(csv_path: str | None = None) -> None:
    for name in ("peer3_parallel", "peer4_parallel_original", "sdirk3_sqrt65", "counterexample_1stage"):
        m, w = parse_method(load_document(f"builtin:{name}"))
        rep = sample_spectral_radius(m)
        line = (f"{name:<26} max rho={rep.max_spectral_radius:.6f} at z={rep.argmax_z:.4g} "
                f"zero stable={zero_stability(m)}")
        if w is not None and w.representation == "original":
            line += f" max weighted norm={weighted_norm_bound(m, w):.6f}"
        print(line)
        if csv_path and name == "counterexample_1stage":
            write_csv(rep, csv_path)
            print(f"samples written to {csv_path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
