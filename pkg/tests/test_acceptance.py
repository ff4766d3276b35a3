"""Acceptance gate: one test (or a small group sharing a number) per criterion.

The terminal summary prints ``CRITERION n: PASS|FAIL`` for each number. Every
tolerance below is the stated one; nothing is widened to make a check pass.
"""
from __future__ import annotations

import json
import random
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from peer_astab.cli import load_document, main, parse_compact
from peer_astab.criterion import certify, construct_general, float_nontrivial_eigs, g_eigenvalues
from peer_astab.designer import parallel_rank_check, reconstruct_diag, recover_node_polynomial
from peer_astab.linalg import inverse, nullspace, psd_check, rank, solve, to_float_matrix, zeros
from peer_astab.maps import (
    _operator_matrix,
    kernel_basis,
    map_L,
    map_P,
    map_Phi,
    map_Psi,
    phi_terms,
    sym_from_vec,
    sym_to_vec,
)
from peer_astab.peer import build_E_Theta, e_tilde, vandermonde
from peer_astab.validate import sample_spectral_radius

from .conftest import load_builtin, rand_nodes, rand_pd, rand_symmetric, rand_unimodular_ish

ETA_4 = 1.80350113085004
NODES_4 = [-0.889874593986289, 0.522100340305431, -0.297184898847891, 1.0]
GDIAG_4 = 0.5544770574
N_CHECKS = 500


def _is_zero(M) -> bool:
    return all(x == 0 for x in np.asarray(M).flat)


def _ends_within(ev: np.ndarray, lo: float, hi: float, tol: float) -> bool:
    return abs(ev[0] - lo) <= tol and abs(ev[-1] - hi) <= tol


# --------------------------------------------------------------------------
# 1-3: worked examples


def test_criterion_1() -> None:
    t0 = time.perf_counter()
    m, w = load_builtin("peer3_parallel")
    hat = certify(m, w)
    mo, wo = load_builtin("peer3_parallel_original")
    orig = certify(mo, wo)
    elapsed = time.perf_counter() - t0

    assert hat.certificate.is_psd and hat.rank == 3
    M = hat.matrix
    assert _is_zero(M[:3, :]) and _is_zero(M[:, :3]) and np.all(M[3:, 3:] == w.W)
    assert orig.certificate.is_psd and orig.rank == 3
    assert _ends_within(float_nontrivial_eigs(orig.matrix, 3), 0.12, 40.16, 1e-2)
    assert elapsed < 1.0


def test_criterion_2() -> None:
    t0 = time.perf_counter()
    m, w = load_builtin("peer4_parallel")
    r = certify(m, w)
    mo, wo = load_builtin("peer4_parallel_original")
    orig = certify(mo, wo)
    elapsed = time.perf_counter() - t0

    assert m.nodes == [-1, Fraction(-2, 5), Fraction(2, 5), 1]
    assert [m.G[i, i] for i in range(4)] == [Fraction(2, 5), Fraction(16, 25), Fraction(24, 25), Fraction(6, 5)]
    assert r.form == "nordsieck" and r.certificate.is_psd and r.rank == 6
    assert r.block_defect == 2 and _is_zero(r.matrix[:2, :]) and _is_zero(r.matrix[:, :2])
    assert np.linalg.eigvalsh(to_float_matrix(r.nontrivial_block)).min() > 0
    assert orig.certificate.is_psd and orig.rank == 6
    assert _ends_within(float_nontrivial_eigs(orig.matrix, 6), 0.021, 194.1, 1e-1)
    assert elapsed < 2.0


def test_criterion_3() -> None:
    t0 = time.perf_counter()
    m, w = load_builtin("sdirk3_sqrt65")
    r = certify(m, w)
    elapsed = time.perf_counter() - t0

    assert str(m.field) == "quadratic:65"
    assert r.form == "original" and r.certificate.is_psd and r.rank == 3
    assert _ends_within(float_nontrivial_eigs(r.matrix, 3), 0.127, 3.033, 1e-2)
    ev = np.sort(np.abs(np.linalg.eigvals(to_float_matrix(m.B))))
    assert np.all(np.abs(ev - [0.0455, 0.4569, 1.0]) <= 1e-3)
    assert elapsed < 5.0


# --------------------------------------------------------------------------
# 4: reconstruction of the four-stage singly implicit method


@pytest.fixture(scope="module")
def rec4():
    return reconstruct_diag(parse_compact(load_document("builtin:compact_sdirk4")))


def test_criterion_4_eta(rec4) -> None:
    eta = float(rec4.eta)
    assert abs(eta - ETA_4) <= 1e-9, f"eta = {eta!r}, error {eta - ETA_4:.3e}"


def test_criterion_4_nodes(rec4) -> None:
    assert np.all(np.abs(np.asarray(rec4.nodes, dtype=float) - NODES_4) <= 1e-8)


def test_criterion_4_g_diagonal(rec4) -> None:
    G = rec4.method.G
    assert np.all(np.triu(G, 1) == 0)
    assert np.all(np.abs(np.diag(G) - GDIAG_4) <= 1e-8)


# --------------------------------------------------------------------------
# 5: constructor property suite


def _constructed_suite():
    rng = random.Random(20240605)
    for s in range(1, 7):
        for _ in range(25):
            c = rand_nodes(rng, s)
            yield construct_general(c, rand_pd(rng, s))


@lru_cache(maxsize=1)
def _suite5():
    t0 = time.perf_counter()
    out = []
    for m, w in _constructed_suite():
        out.append((m, w, certify(m, w)))
    return out, time.perf_counter() - t0


def test_criterion_5() -> None:
    suite, elapsed = _suite5()
    assert len(suite) == 150
    failures = []
    for m, _, r in suite:
        one = np.array([Fraction(1)] * m.s, dtype=object)
        ok = r.a_stable and np.all(m.B @ one == one) and np.all(np.real(g_eigenvalues(m)) >= -1e-12)
        if not ok:
            failures.append(m.nodes)
    assert not failures, failures
    assert elapsed < 60.0


# --------------------------------------------------------------------------
# 6: operator calculus, 500 exact checks per identity


def _sizes(seed: int):
    rng = random.Random(seed)
    return rng, [rng.randint(1, 5) for _ in range(N_CHECKS)]


def _random_E(rng: random.Random, s: int):
    """Alternate between the scaled shift and a node-dependent differentiation matrix."""
    return e_tilde(s) if rng.random() < 0.5 else build_E_Theta(rand_nodes(rng, s))[0]


def test_criterion_6_factorisation() -> None:
    rng, sizes = _sizes(61)
    for s in sizes:
        E = _random_E(rng, s)
        X = rand_symmetric(rng, s)
        P = map_P(E, X)
        assert np.all(P == map_L(E, map_Phi(E, X))) and np.all(P == map_Phi(E, map_L(E, X)))


def test_criterion_6_definiteness() -> None:
    rng, sizes = _sizes(62)
    for s in sizes:
        assert psd_check(map_Phi(_random_E(rng, s), rand_pd(rng, s))).is_pd


def test_criterion_6_congruence() -> None:
    rng, sizes = _sizes(63)
    for s in sizes:
        E = _random_E(rng, s)
        X = rand_symmetric(rng, s)
        U = rand_unimodular_ish(rng, s)
        assert np.all(U.T @ map_Phi(E, X) @ U == map_Phi(inverse(U) @ E @ U, U.T @ X @ U))


def test_criterion_6_kernel_fixed() -> None:
    rng, sizes = _sizes(64)
    for s in sizes:
        E = _random_E(rng, s)
        kb = kernel_basis(E)
        K = kb.combine([Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(len(kb))])
        assert np.all(map_Phi(E, K) == K) and np.all(map_Psi(E, K) == K)


@lru_cache(maxsize=None)
def _op_matrices(s: int):
    E = e_tilde(s)
    return (_operator_matrix(lambda X: map_L(E, X), s, True),
            _operator_matrix(lambda X: map_P(E, X), s, True))


def test_criterion_6_kernels_coincide() -> None:
    rng, sizes = _sizes(65)
    for s in sizes:
        if rng.random() < 0.5:
            E = e_tilde(s)
            AL, AP = _op_matrices(s)
        else:
            E = build_E_Theta(rand_nodes(rng, s))[0]
            AL = _operator_matrix(lambda X: map_L(E, X), s, True)
            AP = _operator_matrix(lambda X: map_P(E, X), s, True)
        for A, other in ((AL, lambda X: map_P(E, X)), (AP, lambda X: map_L(E, X))):
            v = sum(Fraction(rng.randint(-6, 6), rng.randint(1, 3)) * b for b in nullspace(A))
            K = sym_from_vec(v, s)
            assert _is_zero(other(K))
        # and a random symmetric matrix outside the kernel is moved by both maps
        X = rand_symmetric(rng, s)
        assert _is_zero(map_L(E, X)) == _is_zero(map_P(E, X))


def test_criterion_6_termination() -> None:
    rng, sizes = _sizes(66)
    for s in sizes:
        E = _random_E(rng, s)
        X = rand_symmetric(rng, s)
        Xk = X
        for _ in range(2 * s - 1):
            Xk = map_L(E, Xk)
        assert _is_zero(Xk) and len(phi_terms(E, X)) <= 2 * s - 1


def test_criterion_6_inverse() -> None:
    rng, sizes = _sizes(67)
    for s in sizes:
        E = _random_E(rng, s)
        X = rand_symmetric(rng, s)
        assert np.all(map_Phi(E, map_Psi(E, X)) == X) and np.all(map_Psi(E, map_Phi(E, X)) == X)


def test_criterion_6_kernel_dimension() -> None:
    rng, sizes = _sizes(68)
    for s in sizes:
        E = _random_E(rng, s)
        kb = kernel_basis(E)
        assert len(kb) == (s + 1) // 2
        assert all(_is_zero(map_L(E, K)) for K in kb.matrices)
        assert rank(np.array([sym_to_vec(K) for K in kb.matrices], dtype=object)) == len(kb)


def test_criterion_6_zero_patterns() -> None:
    rng, sizes = _sizes(69)
    solved = 0
    for s in sizes:
        k = (s + 1) // 2
        E = e_tilde(s)
        AL, _ = _op_matrices(s)
        R = zeros(s)
        lo = k if rng.random() < 0.7 else 0
        for i in range(s):
            for j in range(lo, s):
                R[i, j] = Fraction(rng.randint(-3, 3))
        U = R.T @ R  # PSD by construction
        try:
            X = sym_from_vec(solve(AL, sym_to_vec(U)), s)
        except Exception:
            # not an image of L: then U must break the pattern
            assert any(U[i, i] != 0 for i in range(k))
            continue
        kb = kernel_basis(E)
        X = X + kb.combine([Fraction(rng.randint(-4, 4)) for _ in range(len(kb))])
        assert np.all(map_L(E, X) == U)
        solved += 1
        assert all(U[i, j] == 0 for i in range(s) for j in range(s) if min(i, j) < k)
        assert all(X[i, j] == 0 for i in range(s) for j in range(s) if i + j + 2 <= s)
    assert solved >= N_CHECKS // 2


# --------------------------------------------------------------------------
# 7: spectral radius sampling agrees with the exact verdicts


def test_criterion_7() -> None:
    certified = [load_builtin(n) for n in ("peer3_parallel", "peer4_parallel", "sdirk3_sqrt65")]
    certified += [(m, w) for m, w, _ in _suite5()[0]]
    bad = []
    for m, w in certified:
        assert certify(m, w).a_stable
        rep = sample_spectral_radius(m)
        rho0 = np.max(np.abs(np.linalg.eigvals(to_float_matrix(m.B))))
        if rep.max_spectral_radius > 1 + 1e-10 or abs(rho0 - 1) > 1e-12:
            bad.append((m.nodes, rep.max_spectral_radius, rho0))
    assert not bad, bad
    ce, _ = load_builtin("counterexample_1stage")
    assert sample_spectral_radius(ce).max_spectral_radius > 1
    assert main(["sample", "builtin:counterexample_1stage"]) == 1


# --------------------------------------------------------------------------
# 8: parallel methods round trip


def test_criterion_8() -> None:
    rng = random.Random(88)
    for _ in range(50):
        s = rng.randint(2, 5)
        c = rand_nodes(rng, s)
        g = []
        while len(g) < s:
            x = Fraction(rng.randint(1, 30), rng.randint(1, 10))
            if x not in g:
                g.append(x)
        G = np.diag(np.array(g, dtype=object))
        V = vandermonde(c)
        Gt = inverse(V) @ G @ V
        chk = parallel_rank_check(Gt)
        assert chk.passes and not chk.degenerate
        poly = recover_node_polynomial(Gt)
        if poly.exact_roots is not None and len(poly.exact_roots) == s:
            got = sorted(float(x) for x in poly.exact_roots)
        else:
            got = sorted(complex(r).real for r in poly.roots)
            assert np.all(np.abs(np.imag(poly.roots)) <= 1e-10)
        assert np.all(np.abs(np.array(got) - sorted(float(x) for x in c)) <= 1e-10)

    fails = 0
    while fails < 50:
        s = rng.randint(3, 5)
        Gt = np.array([[Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(s)] for _ in range(s)],
                      dtype=object)
        F0 = np.zeros((s, s), dtype=object)
        F0[:] = Fraction(0)
        for i in range(1, s):
            F0[i, i - 1] = Fraction(1)
        if _is_zero(F0 @ Gt - Gt @ F0):
            continue
        assert not parallel_rank_check(Gt).passes
        fails += 1


# --------------------------------------------------------------------------
# 9: certificate reproducibility


def _emitted_inputs(tmp_path):
    names = ["peer3_parallel", "peer3_parallel_original", "peer4_parallel", "peer4_parallel_original",
             "sdirk3_sqrt65"]
    for n in names:
        for form in ("auto", "original", "hat", "nordsieck"):
            yield f"builtin:{n}", form
    rng = random.Random(9)
    for i in range(10):
        out = tmp_path / f"constructed{i}.json"
        nodes = ",".join(str(c) for c in rand_nodes(rng, rng.randint(1, 5)))
        assert main(["construct", f"--nodes={nodes}", "--out", str(out)]) == 0
        yield str(out), "auto"
    doc = load_document("builtin:peer3_parallel")
    doc["weights"]["W"][0][0] = "-1"
    neg = tmp_path / "negative.json"
    neg.write_text(json.dumps(doc))
    yield str(neg), "auto"


def test_criterion_9(tmp_path, capsys) -> None:
    count = 0
    for i, (src, form) in enumerate(_emitted_inputs(tmp_path)):
        cert = tmp_path / f"cert{i}.json"
        assert main(["verify", src, "--form", form, "--report", str(cert)]) in (0, 1)
        before = json.loads(cert.read_text())["pivots"]
        assert main(["verify", "--recheck", str(cert)]) == 0
        assert "recheck: identical" in capsys.readouterr().out.splitlines()[-1]
        # byte-for-byte: a fresh certificate carries the same rendered pivot strings
        again = tmp_path / f"again{i}.json"
        main(["verify", src, "--form", form, "--report", str(again)])
        assert json.dumps(json.loads(again.read_text())["pivots"]) == json.dumps(before)
        count += 1
    assert count == 31
