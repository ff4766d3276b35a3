"""Test matrices and exact A-stability certification of stiffly accurate peer methods.

A method with ``A = 0`` is A-stable if there are ``Z`` positive definite and
``W`` positive semidefinite with::

    M = [[G^T Z + Z G - W, -G^T Z B],
         [-B^T Z G,         W      ]]  >= 0

The hat and Nordsieck forms are congruent to ``M`` and expose its rank
defect; :func:`certify` checks whichever form the weights are given in.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import (
    LinAlgError,
    PsdCertificate,
    SingularMatrixError,
    eig_float,
    eye,
    field_of,
    inverse,
    nullspace,
    psd_check,
    to_float_matrix,
    zeros,
)
from .maps import kernel_basis, map_L, map_P, map_Phi, map_Psi, preimage_P, sym_from_vec
from .peer import (
    PeerMethod,
    WeightPair,
    assemble_order_sm1,
    build_E_Theta,
    check_nodes,
    e_tilde,
    nordsieck_H,
    transform_weights,
)

log = logging.getLogger(__name__)

__all__ = [
    "CertificationError",
    "SlackSpec",
    "TestMatrixReport",
    "blocks",
    "build_test_generic",
    "build_test_hat",
    "build_test_nordsieck",
    "build_test_original",
    "certify",
    "construct_general",
    "construct_param",
    "construct_zfree",
    "find_weights_zero_slack",
    "necessary_conditions",
]


class CertificationError(ValueError):
    """Inputs outside the scope of the criterion (``A != 0``, float field, shape)."""


def blocks(M11, M12, M21, M22) -> np.ndarray:
    return np.block([[M11, M12], [M21, M22]])


def _require_stiffly_accurate(m: PeerMethod) -> None:
    if not m.stiffly_accurate:
        raise CertificationError("the criterion covers stiffly accurate methods (A = 0) only")


def build_test_original(m: PeerMethod, w: WeightPair) -> np.ndarray:
    _require_stiffly_accurate(m)
    G, B, Z, W = m.G, m.B, w.Z, w.W
    if Z.shape != G.shape or W.shape != G.shape:
        raise CertificationError("weight dimensions do not match the method")
    GZ = G.T @ Z
    return blocks(GZ + Z @ G - W, -GZ @ B, -(GZ @ B).T, W)


def build_test_generic(E, H, Wh, Zh) -> np.ndarray:
    """Generic test matrix ``[[L_E(Zh) - P_E(Wh), Wh - Zh (H - E)], [sym, Wh]]``."""
    M12 = Wh - Zh @ (H - E)
    return blocks(map_L(E, Zh) - map_P(E, Wh), M12, M12.T, Wh)


def build_test_hat(m: PeerMethod, w: WeightPair) -> np.ndarray:
    """Hat form ``T^T diag(I, Theta^-T) M diag(I, Theta^-1) T`` with ``T = [[I, 0], [I, I]]``.

    Written in ``(E, H, Wh, Zh)`` it is exactly :func:`build_test_generic`.
    """
    _require_stiffly_accurate(m)
    E, _ = m.E_Theta()
    return build_test_generic(E, m.H(), w.W, w.Z)


def build_test_nordsieck(m: PeerMethod, w: WeightPair) -> np.ndarray:
    _require_stiffly_accurate(m)
    return build_test_generic(e_tilde(m.s), nordsieck_H(m), w.W, w.Z)


@dataclass
class TestMatrixReport:
    form: str
    matrix: np.ndarray
    certificate: PsdCertificate
    z_certificate: PsdCertificate
    w_certificate: PsdCertificate
    block_defect: int = 0
    nontrivial_block: np.ndarray | None = None
    order_ok: bool = True
    warnings: list[str] = field(default_factory=list)

    __test__ = False  # not a pytest class

    @property
    def rank(self) -> int:
        return self.certificate.rank

    @property
    def a_stable(self) -> bool:
        return (
            self.certificate.is_psd
            and self.z_certificate.is_pd
            and self.w_certificate.is_psd
            and self.order_ok
        )


def _check_exact(m: PeerMethod, w: WeightPair) -> None:
    if not m.exact:
        raise CertificationError("certification needs exact coefficients (rational or quadratic)")
    try:
        fm = m.field
        fw = field_of(np.concatenate([w.Z, w.W]))
    except LinAlgError as exc:
        raise CertificationError(str(exc)) from exc
    if not fw.exact:
        raise CertificationError("certification needs exact weights")
    if fm.kind == "quadratic" and fw.kind == "quadratic" and fm.d != fw.d:
        raise CertificationError(f"field mismatch: sqrt({fm.d}) vs sqrt({fw.d})")
    if w.Z.shape != m.G.shape or w.W.shape != m.G.shape:
        raise CertificationError("weight dimensions do not match the method")


def certify(m: PeerMethod, w: WeightPair) -> TestMatrixReport:
    """Build the test matrix for ``w.representation`` and decide it exactly.

    Nothing is trusted: ``Z`` definiteness, ``W`` semidefiniteness and the
    order condition (when flagged) are all rechecked. In Nordsieck form the
    leading ``k = (s+1)//2`` rows must vanish, leaving ``0_k + M_D``.
    """
    _require_stiffly_accurate(m)
    _check_exact(m, w)
    builder = {
        "original": build_test_original,
        "hat": build_test_hat,
        "nordsieck": build_test_nordsieck,
    }[w.representation]
    M = builder(m, w)
    cert = psd_check(M)
    zc, wc = psd_check(w.Z), psd_check(w.W)
    warnings = []
    order_ok = True
    if m.order_sm1:
        order_ok = all(x == 0 for x in m.order_residual().flat)
        if not order_ok:
            warnings.append("method is flagged order s-1 but B != (I - G E) Theta")
    if all(x == 0 for x in w.W.flat):
        warnings.append("W = 0: stability rests on Z alone")
    report = TestMatrixReport(w.representation, M, cert, zc, wc, order_ok=order_ok, warnings=warnings)
    if w.representation == "nordsieck":
        s = m.s
        k = (s + 1) // 2
        lead = M[:k, :]
        report.block_defect = k if all(x == 0 for x in lead.flat) else 0
        if cert.is_psd and report.block_defect != k:  # pragma: no cover - contradicts the theory
            warnings.append("semidefinite Nordsieck matrix without the expected zero rows")
        report.nontrivial_block = M[k:, k:]
    else:
        report.block_defect = M.shape[0] - cert.rank if cert.is_psd else 0
    for msg in warnings:
        log.warning(msg)
    return report


def necessary_conditions(m: PeerMethod, w: WeightPair):
    """Residuals of ``(B^T - I) Z G 1 = 0`` and ``W 1 = B^T Z G 1`` (original weights)."""
    if w.representation != "original":
        w = transform_weights(m, w, "original")
    one = np.array([Fraction(1)] * m.s, dtype=object) if m.exact else np.ones(m.s)
    ZG1 = w.Z @ m.G @ one
    r1 = m.B.T @ ZG1 - ZG1
    r2 = w.W @ one - m.B.T @ ZG1
    return r1, r2


# --------------------------------------------------------------------------
# constructions


def construct_general(nodes, W0: np.ndarray):
    """Feasible method from a positive definite seed ``W0`` (hat weights).

    ``Zh = Phi_E(W0)``, ``H = E + Zh^-1 W0``, ``G = H^-1``; the hat test
    matrix is then zero apart from the ``W0`` block.
    """
    c = check_nodes(nodes)
    if W0.shape != (len(c), len(c)):
        raise ValueError("seed dimension must equal the number of nodes")
    if not psd_check(W0).is_pd:
        raise ValueError("seed W0 must be symmetric positive definite")
    E, _ = build_E_Theta(c)
    Zh = map_Phi(E, W0)
    H = E + inverse(Zh) @ W0
    G = inverse(H)
    m = assemble_order_sm1(c, G)
    m._cache["H"] = H
    return m, WeightPair(Zh, W0, "hat")


@dataclass
class SlackSpec:
    """Slack of the feasibility problem: ``M11 = P_E(N)``, off-diagonal ``M12``, kernel part."""

    M11: np.ndarray
    M12: np.ndarray
    kernel_coeffs: list


def construct_param(E: np.ndarray, W0: np.ndarray, slack: SlackSpec):
    """Parametrised feasible triple ``(H, Wh, Zh)`` with slack.

    ``Zh = Phi_E(W0)``, ``Wh = W0 - K - N`` and ``H = E + Zh^-1 (Wh + M12)``.
    The assembled test matrix is recertified; returns ``(H, weights, report_cert)``.
    The off-diagonal block of the result equals ``-M12``, which is
    congruent (via ``diag(I, -I)``) to using ``+M12``.
    """
    s = E.shape[0]
    K = kernel_basis(E).combine(slack.kernel_coeffs) if slack.kernel_coeffs else zeros(s)
    N = preimage_P(E, slack.M11).X
    Wh = W0 - K - N
    if not psd_check(Wh).is_pd:
        raise ValueError("W0 - K - N is not positive definite; reduce the kernel/slack terms")
    Zh = map_Phi(E, W0)
    H = E + inverse(Zh) @ (Wh + slack.M12)
    M = build_test_generic(E, H, Wh, Zh)
    cert = psd_check(M)
    if not cert.is_psd:
        raise ValueError(f"slack is incompatible: test matrix indefinite, witness {list(cert.witness)}")
    return H, WeightPair(Zh, Wh, "hat"), cert


def construct_zfree(E_check: np.ndarray, K_check: np.ndarray | None = None):
    """``Z``-free feasible pair: ``W = Psi_E(I) + K``, ``H = E + W``.

    ``K`` must lie in the kernel of ``L_E``. The generic test matrix with
    ``Zh = I`` then has zero 11 and 12 blocks. Returns ``(H, W)``.
    """
    s = E_check.shape[0]
    exact = E_check.dtype == object
    I = eye(s) if exact else np.eye(s)
    if K_check is None:
        K_check = zeros(s) if exact else np.zeros((s, s))
    if exact and not all(x == 0 for x in map_L(E_check, K_check).flat):
        raise ValueError("K is not in the kernel of L_E")
    W = map_Psi(E_check, I) + K_check
    if exact:
        if not psd_check(W).is_pd:
            raise ValueError("W = Psi_E(I) + K is not positive definite")
    elif np.min(np.linalg.eigvalsh(0.5 * (W + W.T))) <= 0:
        raise ValueError("W = Psi_E(I) + K is not positive definite")
    return E_check + W, W


def _lattice(n: int, points: int):
    """Nonzero coefficient vectors on a uniform lattice in [-1, 1]^n, small norms first."""
    half = (points - 1) // 2
    vals = [Fraction(k, half) for k in range(-half, half + 1)] if half else [Fraction(1)]
    pts = [v for v in itertools.product(vals, repeat=n) if any(v)]
    pts.sort(key=lambda v: (sum(abs(x) for x in v), [abs(x) for x in v], v))
    return pts


def find_weights_zero_slack(nodes, G: np.ndarray, lattice_points: int = 11,
                            max_candidates: int = 20000):
    """Search hat weights with zero slack blocks for a given method.

    Solves the homogeneous linear system ``Zh (H - E)`` symmetric and
    ``Zh - Phi_E(Zh (H - E))`` in the kernel of ``L_E``, then samples the
    solution space on a coefficient lattice for a member with ``Zh > 0`` and
    ``Wh = Zh (H - E) >= 0`` that certifies. ``None`` is inconclusive: it
    says nothing about A-stability outside this subfamily.
    """
    c = check_nodes(nodes)
    s = len(c)
    try:
        H = inverse(G)
    except SingularMatrixError as exc:
        raise ValueError("G must be nonsingular") from exc
    E, _ = build_E_Theta(c)
    HE = H - E
    kb = kernel_basis(E)
    nk = len(kb)
    nz = s * (s + 1) // 2

    def equations(vec):
        Zh = sym_from_vec(vec[:nz], s)
        Wh = Zh @ HE
        K = kb.combine(list(vec[nz:])) if nk else zeros(s)
        r1 = Wh - Wh.T
        r2 = Zh - map_Phi(E, (Wh + Wh.T) / 2) - K
        return np.concatenate([r1[np.triu_indices(s, 1)], r2[np.triu_indices(s)]])

    nvar = nz + nk
    cols = []
    for j in range(nvar):
        e = np.array([Fraction(int(i == j)) for i in range(nvar)], dtype=object)
        cols.append(equations(e))
    A = np.empty((len(cols[0]), nvar), dtype=object)
    for j, col in enumerate(cols):
        A[:, j] = col
    basis = nullspace(A)
    if not basis:
        log.info("zero-slack system has only the trivial solution")
        return None
    m = assemble_order_sm1(c, G)
    candidates = _lattice(len(basis), lattice_points)[:max_candidates]
    for coeffs in candidates:
        v = basis[0] * coeffs[0]
        for b, cf in zip(basis[1:], coeffs[1:]):
            v = v + b * cf
        Zh = sym_from_vec(v[:nz], s)
        Wh = Zh @ HE
        Zf = to_float_matrix(Zh)
        if np.min(np.linalg.eigvalsh(Zf)) <= 0:
            continue
        Wf = to_float_matrix((Wh + Wh.T) / 2)
        if np.min(np.linalg.eigvalsh(Wf)) < -1e-12 * max(1.0, np.abs(Wf).max()):
            continue
        w = WeightPair(Zh, (Wh + Wh.T) / 2, "hat")
        if certify(m, w).a_stable:
            return w
    log.info("no certifying member found on the lattice (inconclusive)")
    return None


def q_similarity(E: np.ndarray, q_coeffs) -> np.ndarray:
    """``q(E) = I + q_1 E + q_2 E^2 + ...`` for ``q(0) = 1``."""
    s = E.shape[0]
    out = eye(s) if E.dtype == object else np.eye(s)
    P = out
    for qk in q_coeffs:
        P = P @ E
        out = out + P * qk
    return out


def float_nontrivial_eigs(M: np.ndarray, rank: int) -> np.ndarray:
    """The ``rank`` largest eigenvalues of a symmetric matrix, in double precision."""
    ev = np.sort(np.linalg.eigvalsh(to_float_matrix(M)))
    return ev[len(ev) - rank:]


def g_eigenvalues(m: PeerMethod) -> np.ndarray:
    return eig_float(m.G)


__all__ += ["q_similarity", "float_nontrivial_eigs", "g_eigenvalues"]
