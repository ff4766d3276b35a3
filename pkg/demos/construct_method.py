"""Build A-stable stiffly accurate methods from node sets and positive definite seeds.

Run: python3 demos/construct_method.py
"""
from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from peer_astab.criterion import certify, construct_general, g_eigenvalues
from peer_astab.linalg import as_exact, eye
from peer_astab.validate import sample_spectral_radius


def describe(nodes, seed):
    m, w = construct_general(nodes, seed)
    r = certify(m, w)
    rho = sample_spectral_radius(m).max_spectral_radius
    ev = g_eigenvalues(m)
    print(f"s={m.s} nodes={[str(c) for c in nodes]}")
    print(f"   certified={r.a_stable} rank={r.rank} min Re eig(G)={np.real(ev).min():.4f} "
          f"sampled max rho={rho:.12f}")
    return m


def main() -> None:
    m = describe([Fraction(0), Fraction(1)], eye(2))
    print("   G =", [[str(x) for x in row] for row in m.G])

    rng = random.Random(1)
    for s in (3, 4, 5):
        nodes = sorted({Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for _ in range(3 * s)})[:s]
        L = as_exact([[rng.randint(-2, 2) if j <= i else 0 for j in range(s)] for i in range(s)])
        describe(nodes, L @ L.T + eye(s))


if __name__ == "__main__":
    main()
