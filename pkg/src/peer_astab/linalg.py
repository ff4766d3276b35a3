"""Dense matrices over exact fields, plus float helpers for cross-checks.

Matrices are numpy arrays. Exact ones use ``dtype=object`` holding ints,
``Fraction`` or :class:`~peer_astab.scalar.QuadExt`; float ones are ordinary
``float64``/``complex128`` arrays. Every exact routine here is division-exact:
no rounding, no tolerances.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .scalar import FieldSpec, QuadExt, is_exact, sign, to_float

__all__ = [
    "LinAlgError",
    "SingularMatrixError",
    "PsdCertificate",
    "as_exact",
    "eig_float",
    "eye",
    "field_of",
    "inverse",
    "is_symmetric",
    "lu_decompose",
    "max_dim",
    "nullspace",
    "psd_check",
    "rank",
    "solve",
    "to_float_matrix",
    "zeros",
]

DEFAULT_MAX_DIM = 32


class LinAlgError(ValueError):
    pass


class SingularMatrixError(LinAlgError):
    def __init__(self, msg: str, rank: int):
        super().__init__(msg)
        self.rank = rank


def max_dim() -> int:
    return int(os.environ.get("PEER_ASTAB_MAX_DIM", DEFAULT_MAX_DIM))


def _check_dim(M) -> None:
    if max(M.shape) > max_dim():
        raise LinAlgError(f"matrix dimension {M.shape} exceeds cap {max_dim()} (PEER_ASTAB_MAX_DIM)")


def _to_exact_scalar(x):
    if isinstance(x, (Fraction, QuadExt)):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    raise TypeError(f"non-exact entry {x!r}; use Fraction or QuadExt")


def as_exact(rows) -> np.ndarray:
    """Object array of exact scalars; ints become Fractions, floats are refused."""
    M = np.array(rows, dtype=object)
    if M.ndim == 1:
        M = M.reshape(-1, 1) if M.size else M
    out = np.empty(M.shape, dtype=object)
    for idx, x in np.ndenumerate(M):
        out[idx] = _to_exact_scalar(x)
    return out


def zeros(n: int, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    out = np.empty((n, m), dtype=object)
    out.fill(Fraction(0))
    return out


def eye(n: int) -> np.ndarray:
    out = zeros(n)
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def field_of(M: np.ndarray) -> FieldSpec:
    if M.dtype != object:
        return FieldSpec("float64")
    d = None
    for x in M.flat:
        if isinstance(x, QuadExt):
            if d is not None and x.d != d:
                raise LinAlgError(f"mixed radicands sqrt({d}) and sqrt({x.d})")
            d = x.d
        elif not is_exact(x):
            return FieldSpec("float64")
    return FieldSpec("quadratic", d) if d is not None else FieldSpec("rational")


def _require_exact(M: np.ndarray, what: str) -> None:
    if not field_of(M).exact:
        raise LinAlgError(f"{what} requires an exact field (rational or quadratic)")


def to_float_matrix(M: np.ndarray) -> np.ndarray:
    if M.dtype != object:
        return np.asarray(M)
    return np.vectorize(to_float, otypes=[float])(M) if M.size else np.zeros(M.shape)


def is_symmetric(M: np.ndarray) -> bool:
    return M.shape[0] == M.shape[1] and bool(np.all(M == M.T))


def _is_zero(x) -> bool:
    return x == 0


def _abs_key(x):
    return abs(x)


# --------------------------------------------------------------------------
# elimination


def lu_decompose(M: np.ndarray):
    """Exact ``P @ M = L @ U`` with partial pivoting on the largest |entry|.

    ``L`` is unit lower triangular. Raises :class:`SingularMatrixError`
    carrying the exact rank when ``M`` is singular.
    """
    _require_exact(M, "lu_decompose")
    n, m = M.shape
    if n != m:
        raise LinAlgError("lu_decompose needs a square matrix")
    U = M.copy()
    L = eye(n)
    perm = list(range(n))
    for k in range(n):
        piv = max(range(k, n), key=lambda i: (_abs_key(U[i, k]), -i))
        if _is_zero(U[piv, k]):
            raise SingularMatrixError("matrix is singular", rank(M))
        if piv != k:
            U[[k, piv], :] = U[[piv, k], :]
            L[[k, piv], :k] = L[[piv, k], :k]
            perm[k], perm[piv] = perm[piv], perm[k]
        for i in range(k + 1, n):
            f = U[i, k] / U[k, k]
            L[i, k] = f
            if f != 0:
                U[i, k:] = U[i, k:] - f * U[k, k:]
            U[i, k] = Fraction(0)
    P = zeros(n)
    for i, p in enumerate(perm):
        P[i, p] = Fraction(1)
    return P, L, U


def _rref(M: np.ndarray):
    """Reduced row echelon form and pivot columns (exact)."""
    R = M.copy()
    n, m = R.shape
    pivots = []
    row = 0
    for col in range(m):
        if row == n:
            break
        piv = next((i for i in range(row, n) if not _is_zero(R[i, col])), None)
        if piv is None:
            continue
        if piv != row:
            R[[row, piv], :] = R[[piv, row], :]
        R[row, :] = R[row, :] / R[row, col]
        for i in range(n):
            if i != row and not _is_zero(R[i, col]):
                R[i, :] = R[i, :] - R[i, col] * R[row, :]
        pivots.append(col)
        row += 1
    return R, pivots


def rank(M: np.ndarray) -> int:
    if M.dtype != object:
        return int(np.linalg.matrix_rank(M))
    return len(_rref(M)[1])


def nullspace(M: np.ndarray) -> list[np.ndarray]:
    """Exact basis of ``{x : M x = 0}`` as a list of 1-D object arrays."""
    if M.dtype != object:
        _, sv, vh = np.linalg.svd(M)
        tol = max(M.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)
        r = int(np.sum(sv > tol))
        return [vh[i].copy() for i in range(r, M.shape[1])]
    R, pivots = _rref(M)
    m = M.shape[1]
    free = [j for j in range(m) if j not in pivots]
    basis = []
    for f in free:
        v = np.array([Fraction(0)] * m, dtype=object)
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -R[r, f]
        basis.append(v)
    return basis


def solve(M: np.ndarray, b: np.ndarray):
    """One exact solution of ``M x = b`` (free variables zero).

    Raises :class:`LinAlgError` with the residual norm-free message when the
    system is inconsistent. Float systems use least squares and report the
    residual in the exception instead.
    """
    if M.dtype != object:
        x, *_ = np.linalg.lstsq(M, b, rcond=None)
        res = float(np.max(np.abs(M @ x - b))) if b.size else 0.0
        scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
        if res > 1e-9 * scale:
            raise LinAlgError(f"inconsistent linear system, residual {res:.3e}")
        return x
    n, m = M.shape
    aug = np.empty((n, m + 1), dtype=object)
    aug[:, :m] = M
    aug[:, m] = b
    R, pivots = _rref(aug)
    if m in pivots:
        raise LinAlgError("inconsistent linear system")
    x = np.array([Fraction(0)] * m, dtype=object)
    for r, p in enumerate(pivots):
        x[p] = R[r, m]
    return x


def inverse(M: np.ndarray) -> np.ndarray:
    """Exact inverse by Gauss-Jordan; floats fall through to numpy."""
    n, m = M.shape
    if n != m:
        raise LinAlgError("inverse needs a square matrix")
    if M.dtype != object:
        return np.linalg.inv(M)
    _check_dim(M)
    aug = np.empty((n, 2 * n), dtype=object)
    aug[:, :n] = M
    aug[:, n:] = eye(n)
    R, pivots = _rref(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular", rank(M))
    return R[:, n:]


# --------------------------------------------------------------------------
# semidefiniteness


@dataclass
class PsdCertificate:
    """Outcome of a symmetric-pivoted exact LDL^T.

    ``permutation[k]`` is the original index eliminated at step ``k``;
    ``L`` is unit lower triangular in permuted order and ``pivots`` holds the
    nonzero diagonal of ``D``. For semidefinite verdicts
    ``P^T L D L^T P == M`` holds exactly; for ``indefinite`` the ``witness``
    satisfies ``w^T M w < 0`` exactly.
    """

    verdict: str
    permutation: list[int]
    pivots: list
    rank: int
    L: np.ndarray
    witness: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def is_psd(self) -> bool:
        return self.verdict in ("positive_definite", "positive_semidefinite")

    @property
    def is_pd(self) -> bool:
        return self.verdict == "positive_definite"

    def reconstruct(self) -> np.ndarray:
        """``P^T L D L^T P`` in original ordering."""
        n = self.L.shape[0]
        D = zeros(n)
        for k, p in enumerate(self.pivots):
            D[k, k] = p
        S = self.L @ D @ self.L.T
        out = zeros(n)
        for a, pa in enumerate(self.permutation):
            for b, pb in enumerate(self.permutation):
                out[pa, pb] = S[a, b]
        return out


def psd_check(M: np.ndarray) -> PsdCertificate:
    """Decide exactly whether symmetric ``M`` is positive (semi)definite.

    At every step the largest remaining diagonal entry is pivoted to the front.
    A negative largest diagonal means indefinite; an all-zero remaining
    diagonal is only admissible if the whole remaining block vanishes.
    """
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise LinAlgError("psd_check needs a square matrix")
    _require_exact(M, "psd_check")
    _check_dim(M)
    if not is_symmetric(M):
        raise LinAlgError("psd_check needs a symmetric matrix")
    S = M.copy()  # working Schur complement, kept in permuted order
    L = eye(n)
    perm = list(range(n))
    pivots = []
    for k in range(n):
        j = max(range(k, n), key=lambda i: (S[i, i], -i))
        dmax = S[j, j]
        if sign(dmax) < 0:
            y = [Fraction(0)] * n
            y[j] = Fraction(1)
            return _indefinite(M, L, perm, pivots, k, y)
        if _is_zero(dmax):
            offending = next(
                ((a, b) for a in range(k, n) for b in range(a, n) if not _is_zero(S[a, b])), None
            )
            if offending is None:
                break
            a, b = offending
            y = [Fraction(0)] * n
            y[a] = Fraction(1)
            if a == b:  # a negative diagonal below a zero maximum
                return _indefinite(M, L, perm, pivots, k, y)
            if sign(S[b, b]) < 0:
                y[a], y[b] = Fraction(0), Fraction(1)
                return _indefinite(M, L, perm, pivots, k, y)
            y[b] = -S[a, b]  # y^T S y = -2 s_ab^2 < 0 since s_aa = s_bb = 0
            return _indefinite(M, L, perm, pivots, k, y)
        if j != k:
            S[[k, j], :] = S[[j, k], :]
            S[:, [k, j]] = S[:, [j, k]]
            L[[k, j], :k] = L[[j, k], :k]
            perm[k], perm[j] = perm[j], perm[k]
        d = S[k, k]
        pivots.append(d)
        col = S[k + 1 :, k] / d
        L[k + 1 :, k] = col
        if n - k - 1:
            S[k + 1 :, k + 1 :] = S[k + 1 :, k + 1 :] - np.outer(col, S[k, k + 1 :])
        S[k + 1 :, k] = Fraction(0)
        S[k, k + 1 :] = Fraction(0)
    r = len(pivots)
    verdict = "positive_definite" if r == n else "positive_semidefinite"
    return PsdCertificate(verdict, perm, pivots, r, L)


def _indefinite(M, L, perm, pivots, k, y):
    """Lift a negative direction ``y`` of the current Schur block to ``M``."""
    n = M.shape[0]
    z = np.array(y, dtype=object)
    z[:k] = Fraction(0)
    # x_perm = L^{-T} z  (back substitution on the unit upper L^T)
    xp = z.copy()
    for i in range(n - 1, -1, -1):
        acc = xp[i]
        for j2 in range(i + 1, n):
            if not _is_zero(L[j2, i]):
                acc = acc - L[j2, i] * xp[j2]
        xp[i] = acc
    x = np.array([Fraction(0)] * n, dtype=object)
    for a, pa in enumerate(perm):
        x[pa] = xp[a]
    val = x @ M @ x
    if sign(val) >= 0:  # pragma: no cover - would mean an elimination bug
        raise AssertionError("witness construction failed")
    return PsdCertificate("indefinite", perm, pivots, len(pivots), L, witness=x)


# --------------------------------------------------------------------------
# floating point, advisory only


def eig_float(M: np.ndarray) -> np.ndarray:
    """All eigenvalues in double precision (LAPACK Hessenberg QR)."""
    A = to_float_matrix(M) if M.dtype == object else np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise LinAlgError("eig_float needs a square matrix")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise LinAlgError(f"eigenvalue iteration did not converge: {exc}") from exc
