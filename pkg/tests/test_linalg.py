from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peer_astab.linalg import (
    LinAlgError,
    SingularMatrixError,
    as_exact,
    eig_float,
    eye,
    inverse,
    lu_decompose,
    max_dim,
    nullspace,
    psd_check,
    rank,
    solve,
    to_float_matrix,
)
from peer_astab.peer import vandermonde, vdm_lu_factors
from peer_astab.scalar import QuadExt, sign

from .conftest import mat, rand_unimodular_ish, symmetric_matrices


def test_identity_is_pd() -> None:
    c = psd_check(eye(3))
    assert c.verdict == "positive_definite"
    assert c.rank == 3
    assert c.witness is None


def test_diag_indefinite_witness() -> None:
    M = mat([[1, 0], [0, -1]])
    c = psd_check(M)
    assert c.verdict == "indefinite"
    assert list(c.witness) == [0, 1]
    assert c.witness @ M @ c.witness < 0


def test_zero_diagonal_with_offdiagonal_is_indefinite() -> None:
    M = mat([[0, 1], [1, 0]])
    c = psd_check(M)
    assert c.verdict == "indefinite"
    assert c.witness @ M @ c.witness < 0


def test_semidefinite_reconstruction() -> None:
    v = mat([[1, 2, -3]])
    M = v.T @ v
    c = psd_check(M)
    assert c.verdict == "positive_semidefinite"
    assert c.rank == 1
    assert np.all(c.reconstruct() == M)


def test_psd_check_rejects_bad_input() -> None:
    with pytest.raises(LinAlgError):
        psd_check(mat([[1, 2], [0, 1]]))
    with pytest.raises(LinAlgError):
        psd_check(np.eye(2))


def test_psd_check_over_quadratic_field() -> None:
    r = QuadExt(0, 1, 65)
    # [[sqrt65, 8], [8, sqrt65]] has determinant 65 - 64 = 1 > 0
    M = np.array([[r, QuadExt(8, 0, 65)], [QuadExt(8, 0, 65), r]], dtype=object)
    assert psd_check(M).verdict == "positive_definite"
    # [[8, sqrt65], [sqrt65, 8]] has determinant -1
    M2 = np.array([[QuadExt(8, 0, 65), r], [r, QuadExt(8, 0, 65)]], dtype=object)
    c = psd_check(M2)
    assert c.verdict == "indefinite"
    assert sign(c.witness @ M2 @ c.witness) < 0


def test_lu_identity_and_vandermonde() -> None:
    P, L, U = lu_decompose(eye(3))
    assert np.all(P == eye(3)) and np.all(L == eye(3)) and np.all(U == eye(3))
    V = vandermonde([0, 2, 1])
    P, L, U = lu_decompose(V)
    assert np.all(P @ V == L @ U)
    LV, UV = vdm_lu_factors([0, 2, 1])
    assert np.all(LV @ UV == V)


def test_lu_singular_reports_rank() -> None:
    with pytest.raises(SingularMatrixError) as info:
        lu_decompose(mat([[1, 1], [1, 1]]))
    assert info.value.rank == 1


def test_inverse_examples() -> None:
    G = mat([["2/5", 0, 0], [0, "20/29", 0], [0, 0, "5/11"]])
    assert np.all(inverse(G) == mat([["5/2", 0, 0], [0, "29/20", 0], [0, 0, "11/5"]]))
    assert np.all(inverse(mat([[1, 1], [0, 1]])) == mat([[1, -1], [0, 1]]))
    assert np.all(inverse(eye(4)) == eye(4))
    with pytest.raises(SingularMatrixError):
        inverse(mat([[1, 2], [2, 4]]))


def test_solve_and_nullspace() -> None:
    A = mat([[1, 2, 3], [2, 4, 6]])
    basis = nullspace(A)
    assert len(basis) == 2
    for v in basis:
        assert np.all(A @ v == 0)
    x = solve(A, np.array([Fraction(1), Fraction(2)], dtype=object))
    assert np.all(A @ x == np.array([1, 2]))
    with pytest.raises(LinAlgError):
        solve(A, np.array([Fraction(1), Fraction(3)], dtype=object))


def test_eig_float_examples(peer3, peer4) -> None:
    ev = np.sort_complex(eig_float(peer3[0].B))
    assert np.allclose(sorted(ev, key=lambda z: (z.real, z.imag)),
                       [0.692 - 0.172j, 0.692 + 0.172j, 1.0], atol=1e-3)
    ev4 = np.sort(eig_float(peer4[0].B).real)
    assert np.allclose(ev4, [-0.2, 0.2, 0.6, 1.0], atol=1e-10)
    assert np.allclose(eig_float(eye(3)), 1.0)


def test_max_dim_cap(monkeypatch) -> None:
    monkeypatch.setenv("PEER_ASTAB_MAX_DIM", "2")
    assert max_dim() == 2
    with pytest.raises(LinAlgError):
        psd_check(eye(3))


# --------------------------------------------------------------------------
# properties


@settings(max_examples=60, deadline=None)
@given(symmetric_matrices())
def test_psd_verdict_is_exactly_sound(M: np.ndarray) -> None:
    c = psd_check(M)
    if c.is_psd:
        assert np.all(c.reconstruct() == M)
        rng = random.Random(0)
        n = M.shape[0]
        for _ in range(50):
            x = np.array([Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(n)], dtype=object)
            assert x @ M @ x >= 0
    else:
        assert c.witness @ M @ c.witness < 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_rank_and_congruence_invariance(n: int, seed: int) -> None:
    rng = random.Random(seed)
    k = rng.randint(0, n)
    V = as_exact([[Fraction(rng.randint(-3, 3)) for _ in range(n)] for _ in range(k)]) if k else None
    M = V.T @ V if V is not None else as_exact([[0] * n for _ in range(n)])
    if rng.random() < 0.3:
        M[0, 0] -= 1
    c = psd_check(M)
    if c.is_psd:
        assert c.rank == rank(M)
    T = rand_unimodular_ish(rng, n)
    c2 = psd_check(T.T @ M @ T)
    assert c2.verdict == c.verdict
    if c.is_psd:
        assert c2.rank == c.rank


def test_to_float_matrix_passthrough() -> None:
    A = np.eye(2)
    assert to_float_matrix(A) is A or np.all(to_float_matrix(A) == A)
