"""Design tools: reconstruction of diagonally implicit methods, parallel-method conditions.

The reconstruction takes a ``Z``-free compact form ``(E_check, X_check)``
and recovers a singly diagonally implicit method in five steps::

    W = Psi_E(I) - X,  H = E + W          (Z-free pair, W must be > 0)
    H = U_H L_H U_H^-1                    (triangular canonical form)
    E' = U_H^-1 E U_H, W' = U_H^T W U_H, Z' = U_H^T U_H
    E' = U_V Et U_V^-1                    (read off the node differences)
    H = L_V L_H L_V^-1, Wh = L_V^-T W' L_V^-1, Zh = L_V^-T Z' L_V^-1

All of this runs in double precision. For parallel methods ``Gt = V^-1 G V``
with diagonal ``G`` the commutator rank test identifies admissible ``Gt``
and recovers the node polynomial.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .linalg import inverse, rank, to_float_matrix, zeros
from .maps import map_Psi
from .peer import PeerMethod, WeightPair, assemble_order_sm1, e_tilde, vdm_lu_factors

log = logging.getLogger(__name__)

DEFAULT_SEED = 0x5EED

__all__ = [
    "CompactForm",
    "DEFAULT_SEED",
    "DesignError",
    "NodePolynomial",
    "Reconstruction",
    "TriangularCanonicalForm",
    "f0_shift",
    "node_difference_matrix",
    "parallel_rank_check",
    "reconstruct_diag",
    "recover_node_polynomial",
    "recover_nodes",
    "sylvester_real_spectrum",
    "tcf_diagonal",
    "triangular_canonical_form",
]


class DesignError(RuntimeError):
    """An algorithmic step failed (no convergence, inconsistent data)."""


# --------------------------------------------------------------------------
# triangular canonical form


@dataclass
class TriangularCanonicalForm:
    U: np.ndarray
    L: np.ndarray
    residual: float
    iterations: int
    restarts: int
    cluster: bool

    @property
    def eigenvalue(self) -> float:
        """Mean of ``diag(L)``; the common eigenvalue for a single cluster."""
        return float(np.mean(np.diag(self.L)).real)


def _tcf_residual(A, U, iu, cluster):
    T = np.linalg.solve(U, A @ U)
    parts = [T[iu]]
    if cluster:
        d = np.diag(T)
        parts.append(d - d.mean())
    return np.concatenate(parts), T


def _tcf_newton(A, U, iu, cluster, max_iter, tol):
    s = A.shape[0]
    n0 = np.inf
    for it in range(max_iter):
        r, T = _tcf_residual(A, U, iu, cluster)
        n0 = np.linalg.norm(r)
        if np.abs(r).max() <= tol:
            return U, it, np.abs(r).max()
        cols = []
        Ui_solve = np.linalg.solve
        for i, j in zip(*iu):
            D = np.zeros((s, s), dtype=A.dtype)
            D[i, j] = 1.0
            dT = Ui_solve(U, A @ D - D @ T)
            col = [dT[iu]]
            if cluster:
                dd = np.diag(dT)
                col.append(dd - dd.mean())
            cols.append(np.concatenate(col))
        J = np.array(cols).T
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-8:
            Un = U.copy()
            Un[iu] += lam * step
            try:
                rn, _ = _tcf_residual(A, Un, iu, cluster)
            except np.linalg.LinAlgError:
                rn = None
            if rn is not None and np.linalg.norm(rn) < n0:
                break
            lam /= 2
        else:
            return U, it, np.abs(r).max()
        if np.linalg.norm(rn) > (1 - 1e-14) * n0 and lam < 1e-6:
            return Un, it, np.abs(rn).max()
        U = Un
    r, _ = _tcf_residual(A, U, iu, cluster)
    return U, max_iter, np.abs(r).max()


def triangular_canonical_form(A, prescribed_diag, *, cluster: bool = False, tol: float = 1e-12,
                              max_iter: int = 200, restarts: int = 10,
                              seed: int = DEFAULT_SEED) -> TriangularCanonicalForm:
    """``A = U L U^-1`` with ``U`` upper triangular (diagonal fixed) and ``L`` lower.

    Damped Newton on the strict upper entries of ``U``; the residual is the
    strict upper triangle of ``U^-1 A U``. With ``cluster=True`` the residual
    is augmented by the spread of the diagonal of ``U^-1 A U`` and solved in
    the least squares sense. That is the right model when ``A`` should have a
    single ``s``-fold (defective) eigenvalue but its entries carry rounding
    errors: the exact form then has a split diagonal and a badly conditioned
    ``U``, while the clustered fit stays close to the intended factors.
    ``tol`` then applies to the fit residual, which cannot fall below the
    data error.

    Raises :class:`DesignError` when no start converges.
    """
    A = np.asarray(to_float_matrix(A) if np.asarray(A).dtype == object else A)
    s = A.shape[0]
    if A.shape != (s, s):
        raise ValueError("A must be square")
    d = np.asarray(prescribed_diag, dtype=A.dtype)
    if d.shape != (s,) or np.any(d == 0):
        raise ValueError("prescribed diagonal must have s nonzero entries")
    iu = np.triu_indices(s, 1)
    rng = np.random.default_rng(seed)
    best = None
    for attempt in range(restarts + 1):
        U0 = np.diag(d).astype(A.dtype)
        if attempt:
            U0[iu] += rng.standard_normal(len(iu[0])) * np.abs(d[iu[0]])
        try:
            U, it, res = _tcf_newton(A, U0, iu, cluster, max_iter, tol)
        except np.linalg.LinAlgError:
            continue
        if best is None or res < best[2]:
            best = (U, it, res, attempt)
        if res <= tol:
            break
    if best is None:
        raise DesignError("triangular canonical form: every start hit a singular U")
    U, it, res, attempt = best
    if res > tol:
        raise DesignError(
            f"triangular canonical form did not converge: residual {res:.3e} > {tol:.1e} "
            f"after {restarts + 1} starts"
        )
    T = np.linalg.solve(U, A @ U)
    return TriangularCanonicalForm(U, np.tril(T), float(res), it, attempt, cluster)


def tcf_diagonal(E_check) -> list[float]:
    """``u_11 = 1``, ``u_ii = (i-1)! / prod_{j<i} e_{j,j+1}`` so that ``E'`` gets superdiagonal ``1..s-1``."""
    E = to_float_matrix(E_check) if np.asarray(E_check).dtype == object else np.asarray(E_check)
    s = E.shape[0]
    out = [1.0]
    p = 1.0
    for i in range(1, s):
        p *= E[i - 1, i]
        out.append(factorial(i) / p)
    return out


# --------------------------------------------------------------------------
# nodes from the transformed difference matrix


def node_difference_matrix(nodes) -> np.ndarray:
    """``L_V^-1 E L_V = U_V Et U_V^-1``: strictly upper, depends on node differences only."""
    c = list(nodes)
    exact = not any(isinstance(x, float) for x in c)
    _, UV = vdm_lu_factors(c)
    Et = e_tilde(len(c), exact)
    if not exact:
        UV = np.asarray(UV, dtype=float)
    return UV @ Et @ inverse(UV)


def recover_nodes(E_prime, c1, cs, *, tol: float = 1e-8):
    """Nodes ``c_2..c_{s-1}`` from ``E' = U_V Et U_V^-1`` and the free nodes ``c_1, c_s``.

    The second superdiagonal determines them one by one,
    ``c_{i+1} = (c_1 + ... + c_i - e'_{i,i+2}) / i``; for ``s >= 4`` the
    remaining entries are an overdetermined check. Returns ``(nodes, residual)``.
    """
    Ep = np.asarray(E_prime)
    exact = Ep.dtype == object
    s = Ep.shape[0]
    if s < 2:
        return [c1], 0.0
    sup = [Ep[i, i + 1] for i in range(s - 1)]
    want = [Fraction(i + 1) if exact else float(i + 1) for i in range(s - 1)]
    dev = max(abs(float(a - b)) for a, b in zip(sup, want))
    if dev > tol:
        raise DesignError(f"superdiagonal of E' deviates from 1..s-1 by {dev:.3e}")
    c = [c1]
    for i in range(1, s - 1):
        c.append((sum(c) - Ep[i - 1, i + 1]) / i)
    c.append(cs)
    for i in range(s):
        for j in range(i):
            if (c[i] == c[j]) if exact else abs(c[i] - c[j]) <= tol * max(1.0, abs(c[i])):
                raise DesignError(f"recovered nodes coincide: c{j + 1} = c{i + 1} = {c[i]}")
    target = node_difference_matrix(c)
    diff = target - Ep
    residual = max((abs(float(x)) for x in diff.flat), default=0.0)
    if not exact and residual > tol:
        raise DesignError(f"E' is not of Vandermonde type: residual {residual:.3e}")
    if exact and residual != 0:
        raise DesignError(f"E' is not of Vandermonde type: residual {residual}")
    return c, residual


def four_stage_consistency(E_prime) -> float:
    """``2 e'_14 - e'_13 (e'_13 + e'_24)``, zero for Vandermonde type ``E'`` with ``s = 4``."""
    Ep = np.asarray(E_prime)
    return float(2 * Ep[0, 3] - Ep[0, 2] * (Ep[0, 2] + Ep[1, 3]))


# --------------------------------------------------------------------------
# five-step reconstruction


@dataclass
class CompactForm:
    """``Z``-free seed: strictly upper ``E_check`` and symmetric ``X_check``.

    The weight is ``W = Psi_E(I) - X_check``; kernel and slack parts of
    ``X_check`` must make ``P_E(X_check)`` positive semidefinite.
    """

    E_check: np.ndarray
    X_check: np.ndarray
    c1: object = -1
    cs: object = 1

    def __post_init__(self):
        E = self.E_check
        s = E.shape[0]
        if E.shape != (s, s) or self.X_check.shape != (s, s):
            raise ValueError("E_check and X_check must be square of equal size")
        if any(E[i, j] != 0 for i in range(s) for j in range(i + 1)):
            raise ValueError("E_check must be strictly upper triangular")
        if any(E[i, i + 1] == 0 for i in range(s - 1)):
            raise ValueError("E_check needs a nonzero superdiagonal")
        if not np.all(self.X_check == self.X_check.T):
            raise ValueError("X_check must be symmetric")

    @property
    def s(self) -> int:
        return self.E_check.shape[0]


@dataclass
class Reconstruction:
    method: PeerMethod
    weights: WeightPair
    eta: float
    nodes: list
    tcf: TriangularCanonicalForm
    E_prime: np.ndarray
    H_check: np.ndarray
    W_check: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def reconstruct_diag(cf: CompactForm, *, tol: float = 1e-9, tcf_tol: float = 1e-8) -> Reconstruction:
    """Run the five reconstruction steps in double precision.

    ``eta`` is the mean of the diagonal of ``L_H`` (the trace of ``H_check``
    over ``s``), the well conditioned centre of the eigenvalue cluster.
    Raises ``ValueError`` if ``W`` is not positive definite and
    :class:`DesignError` for failures of the later steps.
    """
    s = cf.s
    E = to_float_matrix(cf.E_check) if cf.E_check.dtype == object else np.asarray(cf.E_check, float)
    X = to_float_matrix(cf.X_check) if cf.X_check.dtype == object else np.asarray(cf.X_check, float)
    # step 1
    W = map_Psi(E, np.eye(s)) - X
    w_min = float(np.linalg.eigvalsh(W).min())
    if w_min <= 0:
        raise ValueError(f"W = Psi_E(I) - X is not positive definite (min eigenvalue {w_min:.3e})")
    H = E + W
    # step 2
    spec = sylvester_real_spectrum(H)
    tcf = triangular_canonical_form(H, tcf_diagonal(E), cluster=True, tol=tcf_tol)
    UH = tcf.U
    eta = tcf.eigenvalue
    Hp = tcf.L.copy()
    np.fill_diagonal(Hp, eta)
    # step 3
    Ep = np.linalg.solve(UH, E @ UH)
    Wp = UH.T @ W @ UH
    Zp = UH.T @ UH
    # step 4
    Ep = np.triu(Ep, 1)
    c1, cs = float(cf.c1), float(cf.cs)
    nodes, node_res = recover_nodes(Ep, c1, cs, tol=max(tol, 10 * tcf.residual))
    # step 5
    LV, _ = vdm_lu_factors(nodes)
    LV = np.asarray(LV, dtype=float)
    LVi = np.linalg.inv(LV)
    Hm = LV @ Hp @ LVi
    upper = np.abs(np.triu(Hm, 1)).max() if s > 1 else 0.0
    if upper > tol * max(1.0, np.abs(Hm).max()):
        raise DesignError(f"H is not lower triangular: max upper entry {upper:.3e}")
    Hm = np.tril(Hm)
    G = np.linalg.inv(Hm)
    G = np.tril(G)
    Wh = LVi.T @ Wp @ LVi
    Zh = LVi.T @ Zp @ LVi
    Wh = (Wh + Wh.T) / 2
    Zh = (Zh + Zh.T) / 2
    method = assemble_order_sm1(nodes, G)
    diagnostics = {
        "w_check_min_eig": w_min,
        "tcf_residual": tcf.residual,
        "node_residual": node_res,
        "upper_H": float(upper),
        "real_spectrum": spec,
    }
    if s == 4:
        diagnostics["consistency"] = four_stage_consistency(Ep)
    return Reconstruction(method, WeightPair(Zh, Wh, "hat"), eta, nodes, tcf, Ep, H, W, diagnostics)


def sylvester_real_spectrum(A) -> bool | None:
    """Advisory: are all eigenvalues of ``A`` real?

    Hankel matrix of power traces ``S_ij = tr(A^(i+j))``; its inertia counts
    distinct real eigenvalues against conjugate pairs. All eigenvalues are
    real iff the Hankel matrix is positive semidefinite. Here it is decided
    from the pivots of an unpivoted LU; ``None`` when a pivot is too close to
    zero to decide (which happens for clustered eigenvalues).
    """
    A = np.asarray(A, dtype=float)
    s = A.shape[0]
    traces = [float(s)]
    P = np.eye(s)
    for _ in range(2 * s - 2):
        P = P @ A
        traces.append(float(np.trace(P)))
    S = np.array([[traces[i + j] for j in range(s)] for i in range(s)])
    scale = np.abs(S).max()
    M = S.copy()
    for k in range(s):
        piv = M[k, k]
        if abs(piv) <= 1e-10 * scale:
            return None if np.abs(M[k:, k:]).max() > 1e-10 * scale else True
        if piv < 0:
            return False
        M[k + 1:, k:] -= np.outer(M[k + 1:, k] / piv, M[k, k:])
    return True


# --------------------------------------------------------------------------
# parallel methods


def f0_shift(s: int, exact: bool = True) -> np.ndarray:
    """Companion shift with ones on the subdiagonal, so ``C V = V (F0 - p e_s^T)``."""
    F = zeros(s) if exact else np.zeros((s, s))
    for i in range(1, s):
        F[i, i - 1] = Fraction(1) if exact else 1.0
    return F


def _rank_matrix(Gt):
    s = Gt.shape[0]
    exact = Gt.dtype == object
    F0 = f0_shift(s, exact)
    comm = F0 @ Gt - Gt @ F0
    return np.concatenate([comm, Gt[s - 1:s, :]])[:, : s - 1]


@dataclass
class RankCheck:
    passes: bool
    residual_rank: int
    degenerate: bool = False


def parallel_rank_check(Gt) -> RankCheck:
    """Necessary condition for ``Gt = V^-1 G V`` with diagonal ``G``.

    The ``(s+1) x (s-1)`` matrix of ``[F0, Gt]`` stacked over ``e_s^T Gt``
    (first ``s-1`` columns) must have rank one. Rank zero (``Gt`` a multiple
    of the identity) passes as degenerate.
    """
    Gt = np.asarray(Gt)
    if Gt.ndim != 2 or Gt.shape[0] != Gt.shape[1]:
        raise ValueError("Gt must be square")
    if Gt.shape[0] == 1:
        return RankCheck(True, 0, True)
    r = rank(_rank_matrix(Gt))
    return RankCheck(r <= 1, r, r == 0)


@dataclass
class NodePolynomial:
    """Monic ``p(x) = x^s + sum_i p_i x^(i-1)``; ``p`` holds ``p_1..p_s``."""

    p: list
    roots: np.ndarray
    exact_roots: list | None = None

    def coefficients_high_first(self) -> list:
        return [1] + list(reversed(self.p))

    def column_sum_residual(self):
        """``1^T p + 1``; zero iff ``x = 1`` is a node."""
        return sum(self.p) + 1


def recover_node_polynomial(Gt) -> NodePolynomial:
    """Node polynomial from ``([F0, Gt] - p e_s^T Gt)_{:, 1..s-1} = 0``.

    Each row of the commutator block is ``p_i`` times the last row of ``Gt``.
    Roots come from ``numpy.roots``; over the rationals candidate roots are
    rationalised and accepted only if they are exact roots.
    """
    Gt = np.asarray(Gt)
    s = Gt.shape[0]
    exact = Gt.dtype == object
    chk = parallel_rank_check(Gt)
    if chk.degenerate:
        raise DesignError("Gt is a multiple of the identity: the node polynomial is undetermined")
    if not chk.passes:
        raise DesignError(f"rank condition fails (rank {chk.residual_rank})")
    F0 = f0_shift(s, exact)
    comm = (F0 @ Gt - Gt @ F0)[:, : s - 1]
    last = Gt[s - 1, : s - 1]
    j = max(range(s - 1), key=lambda k: abs(float(last[k])))
    if (last[j] == 0) if exact else abs(last[j]) < 1e-14 * max(1.0, np.abs(to_float_matrix(Gt)).max()):
        raise DesignError("last row of Gt vanishes on the first s-1 columns")
    p = [comm[i, j] / last[j] for i in range(s)]
    resid = comm - np.outer(np.array(p, dtype=object if exact else float), last)
    bad = any(x != 0 for x in resid.flat) if exact else np.abs(resid).max() > 1e-8
    if bad:
        raise DesignError("inconsistent node polynomial system")
    coeffs = [1.0] + [float(x) for x in reversed(p)]
    roots = np.roots(coeffs)
    exact_roots = None
    if exact:
        exact_roots = []
        for r in roots:
            if abs(r.imag) > 1e-9:
                continue
            cand = Fraction(float(r.real)).limit_denominator(10**6)
            if _poly_eval(p, cand) == 0 and cand not in exact_roots:
                exact_roots.append(cand)
    return NodePolynomial(p, roots, exact_roots)


def _poly_eval(p, x):
    acc = Fraction(1)
    for coef in reversed(p):
        acc = acc * x + coef
    return acc


__all__ += ["RankCheck", "four_stage_consistency"]
