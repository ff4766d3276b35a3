"""Linear maps on symmetric matrices attached to a nilpotent ``E``.

``L_E(X) = X E + E^T X`` and ``P_E(X) = Theta^T X Theta - X`` with
``Theta = exp(E)`` are linked by ``P_E = L_E . Phi_E = Phi_E . L_E`` where
``Phi_E = phi(L_E)``, ``phi(z) = (e^z - 1)/z``. Its inverse is
``Psi_E = psi(L_E)``, ``psi(z) = z/(e^z - 1)``. Because ``L_E`` is nilpotent
of index at most ``2s - 1`` all of these are finite sums, exact over Q.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .linalg import LinAlgError, inverse, nullspace, rank, solve, zeros
from .peer import e_tilde, exp_nilpotent

__all__ = [
    "BernoulliTable",
    "KernelBasis",
    "Preimage",
    "bernoulli_numbers",
    "kernel_basis",
    "map_L",
    "map_P",
    "map_Phi",
    "map_Psi",
    "phi_terms",
    "preimage_P",
    "sym_from_vec",
    "sym_to_vec",
]


def _exact(E) -> bool:
    return E.dtype == object


def map_L(E: np.ndarray, X: np.ndarray) -> np.ndarray:
    return X @ E + E.T @ X


def map_P(E: np.ndarray, X: np.ndarray) -> np.ndarray:
    Th = exp_nilpotent(E)
    return Th.T @ X @ Th - X


def phi_terms(E: np.ndarray, X: np.ndarray) -> list[np.ndarray]:
    """``[X_0, X_1, ...]`` with ``X_k = L_E(X_{k-1})`` up to the last nonzero term."""
    s = E.shape[0]
    terms = [X]
    for _ in range(2 * s - 2):
        nxt = map_L(E, terms[-1])
        if _exact(nxt) and all(x == 0 for x in nxt.flat):
            break
        terms.append(nxt)
    return terms


def map_Phi(E: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``sum_k X_k / (k+1)!`` over the terminating recursion."""
    out = None
    for k, Xk in enumerate(phi_terms(E, X)):
        t = Xk / factorial(k + 1) if _exact(Xk) else Xk / float(factorial(k + 1))
        out = t if out is None else out + t
    return out


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> tuple[Fraction, ...]:
    """``B_0..B_n`` with ``B_1 = -1/2`` (so ``z/(e^z-1) = sum B_k z^k/k!``)."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(comb(m + 1, k) * B[k] for k in range(m)) / (m + 1))
    return tuple(B)


@dataclass(frozen=True)
class BernoulliTable:
    """``beta_k = |B_2k|`` so that ``psi(z) = 1 - z/2 - sum (-1)^k beta_k z^2k/(2k)!``."""

    beta: tuple[Fraction, ...]

    @classmethod
    def up_to(cls, kmax: int) -> BernoulliTable:
        B = bernoulli_numbers(2 * kmax)
        return cls(tuple((-1) ** (k + 1) * B[2 * k] for k in range(1, kmax + 1)))

    def psi_coefficients(self) -> list[Fraction]:
        """Power series coefficients of ``psi`` up to degree ``2*kmax``."""
        c = [Fraction(0)] * (2 * len(self.beta) + 1)
        c[0] = Fraction(1)
        if len(c) > 1:
            c[1] = Fraction(-1, 2)
        for k, b in enumerate(self.beta, start=1):
            c[2 * k] = -((-1) ** k) * b / factorial(2 * k)
        return c


def map_Psi(E: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Inverse of :func:`map_Phi`: ``-L_E(X)/2 + X - sum (-1)^k beta_k L_E^{2k}(X)/(2k)!``."""
    s = E.shape[0]
    kmax = max((2 * s - 2) // 2, 0)
    coeffs = BernoulliTable.up_to(kmax).psi_coefficients()
    out = None
    for k, Xk in enumerate(phi_terms(E, X)):
        if k >= len(coeffs):
            break
        c = coeffs[k] if _exact(Xk) else float(coeffs[k])
        out = Xk * c if out is None else out + Xk * c
    return out


# --------------------------------------------------------------------------
# symmetric vectorisation helpers


def _sym_index(s: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(s) for j in range(i, s)]


def sym_to_vec(X: np.ndarray) -> np.ndarray:
    return np.array([X[i, j] for i, j in _sym_index(X.shape[0])], dtype=X.dtype)


def sym_from_vec(v, s: int) -> np.ndarray:
    exact = np.asarray(v).dtype == object
    X = zeros(s) if exact else np.zeros((s, s))
    for (i, j), x in zip(_sym_index(s), v):
        X[i, j] = x
        X[j, i] = x
    return X


def _unit_sym(s: int, i: int, j: int, exact: bool) -> np.ndarray:
    X = zeros(s) if exact else np.zeros((s, s))
    one = Fraction(1) if exact else 1.0
    X[i, j] = one
    X[j, i] = one
    return X


def _operator_matrix(op, s: int, exact: bool) -> np.ndarray:
    """Matrix of a linear map on symmetric ``s x s`` matrices in the upper-triangle basis."""
    idx = _sym_index(s)
    cols = [sym_to_vec(op(_unit_sym(s, i, j, exact))) for i, j in idx]
    if exact:
        A = np.empty((len(idx), len(idx)), dtype=object)
        for c, v in enumerate(cols):
            A[:, c] = v
        return A
    return np.column_stack(cols).astype(float)


# --------------------------------------------------------------------------
# kernel of L_E


@dataclass
class KernelBasis:
    """Symmetric solutions of ``K E + E^T K = 0``.

    ``anchors[m]`` is the diagonal position used to parametrise the ``m``-th
    element (the element has a 1 there and zero at the other anchors).
    """

    matrices: list[np.ndarray]
    anchors: list[tuple[int, int]]

    def __len__(self):
        return len(self.matrices)

    def combine(self, coeffs) -> np.ndarray:
        if len(coeffs) != len(self.matrices):
            raise ValueError("one coefficient per kernel element")
        out = self.matrices[0] * coeffs[0]
        for K, c in zip(self.matrices[1:], coeffs[1:]):
            out = out + K * c
        return out


def kernel_anchors(s: int) -> list[tuple[int, int]]:
    """Diagonal entries ``(m, m)`` (0-based) that parametrise the kernel of ``L_Et``."""
    return [(t // 2 - 1, t // 2 - 1) for t in range(s + 1, 2 * s + 1) if t % 2 == 0]


def _kernel_nordsieck(s: int) -> list[np.ndarray]:
    # One element per even antidiagonal i+j = t > s (1-based), by the recursion
    # (j-1) x[i, j-1] + (i-1) x[i-1, j] = 0 started at x[t-s, s].
    out = []
    for t in range(s + 1, 2 * s + 1):
        if t % 2:
            continue
        K = zeros(s)
        chain = {t - s: Fraction(1)}
        for a in range(t - s + 1, s + 1):
            chain[a] = -Fraction(a - 1, t - a) * chain[a - 1]
        mid = chain[t // 2]
        for a, v in chain.items():
            K[a - 1, t - a - 1] = v / mid
        out.append(K)
    return out


def _is_e_tilde(E: np.ndarray) -> bool:
    return _exact(E) and bool(np.all(E == e_tilde(E.shape[0])))


def kernel_basis(E: np.ndarray, U: np.ndarray | None = None) -> KernelBasis:
    """Basis of ``ker L_E`` on symmetric matrices.

    For ``E = Et`` the antidiagonal recursion is used; with ``E = U Et U^-1``
    and ``U`` supplied the basis is carried over by congruence
    (``K = U^-T Kt U^-1``); otherwise the null space is computed directly.
    Elements are normalised to the anchors of :func:`kernel_anchors`, or to
    the first positions that separate them when the anchors do not.
    """
    s = E.shape[0]
    exact = _exact(E)
    anchors = kernel_anchors(s)
    if _is_e_tilde(E) and U is None:
        return KernelBasis(_kernel_nordsieck(s), anchors)
    if U is not None:
        Ui = inverse(U)
        raw = [Ui.T @ K @ Ui for K in _kernel_nordsieck(s)]
        if not exact:
            raw = [np.asarray(K, dtype=float) if K.dtype != object else K for K in raw]
    else:
        A = _operator_matrix(lambda X: map_L(E, X), s, exact)
        raw = [sym_from_vec(v, s) for v in nullspace(A)]
    if len(raw) != len(anchors):
        raise LinAlgError(
            f"kernel of L_E has dimension {len(raw)}, expected {len(anchors)}; is E similar to Et?"
        )
    anchors = _independent_anchors(raw, anchors, s, exact)
    return KernelBasis(_normalise(raw, anchors, exact), anchors)


def _independent_anchors(raw, preferred, s, exact):
    """``preferred`` if the elements are independent there, else the first positions that are."""
    order = list(preferred) + [p for p in _sym_index(s) if p not in preferred]
    chosen, rows = [], []
    for i, j in order:
        trial = rows + [[K[i, j] for K in raw]]
        if rank(np.array(trial, dtype=object if exact else float)) == len(trial):
            chosen.append((i, j))
            rows = trial
        if len(chosen) == len(raw):
            break
    return chosen


def _normalise(raw, anchors, exact):
    """Recombine so element m has 1 at anchor m and 0 at the others."""
    n = len(raw)
    if n == 0:
        return []
    A = np.empty((n, n), dtype=object if exact else float)
    for r, (i, j) in enumerate(anchors):
        for c, K in enumerate(raw):
            A[r, c] = K[i, j]
    out = []
    for m in range(n):
        e = np.array([Fraction(int(r == m)) if exact else float(r == m) for r in range(n)],
                     dtype=object if exact else float)
        coef = solve(A, e)
        K = raw[0] * coef[0]
        for Kc, c in zip(raw[1:], coef[1:]):
            K = K + Kc * c
        out.append(K)
    return out


# --------------------------------------------------------------------------
# pre-images under P_E


@dataclass
class Preimage:
    """``X`` with ``P_E(X) = U``; ``kernel_params`` are ``X`` at the kernel anchors."""

    X: np.ndarray
    particular: np.ndarray
    kernel: KernelBasis
    kernel_params: list


def preimage_P(E: np.ndarray, U: np.ndarray, kernel_params=None) -> Preimage:
    """Symmetric solution of ``P_E(X) = U``.

    The kernel component is fixed by prescribing ``X`` at the anchor entries
    (``x33, x44`` for ``s = 4``); by default those are zero. Raises
    :class:`~peer_astab.linalg.LinAlgError` if ``U`` is not in the range.
    """
    s = E.shape[0]
    exact = _exact(E) and _exact(U)
    A = _operator_matrix(lambda X: map_P(E, X), s, exact)
    b = sym_to_vec(U)
    if not exact:
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
    try:
        v = solve(A, b)
    except LinAlgError as exc:
        raise LinAlgError(f"U is not in the range of P_E: {exc}") from exc
    X0 = sym_from_vec(v, s)
    K = kernel_basis(E)
    params = list(kernel_params) if kernel_params is not None else [
        Fraction(0) if exact else 0.0 for _ in K.anchors
    ]
    if len(params) != len(K):
        raise ValueError(f"expected {len(K)} kernel parameters")
    X = X0
    for Km, (i, j), p in zip(K.matrices, K.anchors, params):
        X = X + Km * (p - X[i, j])
    return Preimage(X, X0, K, params)
