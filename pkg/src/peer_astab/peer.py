"""Peer two-step method structure.

A stiffly accurate peer method with nodes ``c`` and coefficients ``(G, B)``
has order ``s-1`` when ``B = (I - G E) Theta``, where ``E`` differentiates and
``Theta`` extrapolates the interpolation polynomial through the nodes. In the
Nordsieck basis (``V`` the Vandermonde matrix) these become the scaled shift
``Et = V^{-1} E V`` with ``Et[i, i+1] = i+1`` (0-based) and the Pascal matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .linalg import LinAlgError, as_exact, eye, field_of, inverse, to_float_matrix, zeros
from .scalar import FieldSpec

__all__ = [
    "REPRESENTATIONS",
    "PeerMethod",
    "WeightPair",
    "assemble_order_sm1",
    "build_E_Theta",
    "check_nodes",
    "e_tilde",
    "exp_nilpotent",
    "pascal",
    "stability_matrix",
    "transform_weights",
    "vandermonde",
    "vdm_lu_factors",
]

REPRESENTATIONS = ("original", "hat", "nordsieck")
POLE_COND = 1e14


def _exact_or_float(x):
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return x


def check_nodes(nodes) -> list:
    c = [_exact_or_float(x) for x in nodes]
    if not c:
        raise ValueError("need at least one node")
    for i in range(len(c)):
        for j in range(i):
            if c[i] == c[j]:
                raise ValueError(f"nodes must be distinct, c[{j}] == c[{i}] == {c[i]}")
    return c


def _matrix(rows, exact: bool) -> np.ndarray:
    return as_exact(rows) if exact else np.array(rows, dtype=float)


def _is_exact_nodes(c) -> bool:
    return not any(isinstance(x, float) for x in c)


def vandermonde(nodes) -> np.ndarray:
    """``V[i, j] = c_i ** j``."""
    c = check_nodes(nodes)
    s = len(c)
    return _matrix([[ci**j for j in range(s)] for ci in c], _is_exact_nodes(c))


def vdm_lu_factors(nodes):
    """Closed-form Newton factors ``V = L_V @ U_V``.

    ``L_V[i, j] = prod_{k<j} (c_i - c_k)`` (Newton basis at the nodes) and
    ``U_V^{-1}[i, j] = (-1)^(j-i) e_{j-i}(c_1..c_{j-1})`` (elementary symmetric
    functions), i.e. ``U_V`` is unit upper triangular.
    """
    c = check_nodes(nodes)
    s = len(c)
    exact = _is_exact_nodes(c)
    one = Fraction(1) if exact else 1.0
    L = [[one * 0] * s for _ in range(s)]
    for i in range(s):
        for j in range(i + 1):
            p = one
            for k in range(j):
                p = p * (c[i] - c[k])
            L[i][j] = p
    Uinv = [[one * 0] * s for _ in range(s)]
    for j in range(s):
        # coefficients of prod_{k<j} (x - c_k) in the monomial basis
        poly = [one]
        for k in range(j):
            poly = [(poly[m - 1] if m else 0) - c[k] * (poly[m] if m < len(poly) else 0)
                    for m in range(len(poly) + 1)]
        for i in range(j + 1):
            Uinv[i][j] = poly[i]
    Lm, Uinv_m = _matrix(L, exact), _matrix(Uinv, exact)
    return Lm, inverse(Uinv_m)


def vdm_l_inverse(nodes) -> np.ndarray:
    """``(L_V^{-1})[i, j] = prod_{k<=i, k!=j} 1/(c_j - c_k)`` for ``j <= i``."""
    c = check_nodes(nodes)
    s = len(c)
    exact = _is_exact_nodes(c)
    one = Fraction(1) if exact else 1.0
    out = [[one * 0] * s for _ in range(s)]
    for i in range(s):
        for j in range(i + 1):
            p = one
            for k in range(i + 1):
                if k != j:
                    p = p / (c[j] - c[k])
            out[i][j] = p
    return _matrix(out, exact)


def e_tilde(s: int, exact: bool = True) -> np.ndarray:
    """Scaled shift: superdiagonal ``1, 2, ..., s-1``, zero elsewhere."""
    if s < 1:
        raise ValueError("s must be positive")
    E = zeros(s) if exact else np.zeros((s, s))
    for i in range(s - 1):
        E[i, i + 1] = Fraction(i + 1) if exact else float(i + 1)
    return E


def exp_nilpotent(N: np.ndarray) -> np.ndarray:
    """``exp(N)`` by the terminating series; ``N`` must be nilpotent."""
    s = N.shape[0]
    exact = N.dtype == object
    out = eye(s) if exact else np.eye(s)
    term = eye(s) if exact else np.eye(s)
    for k in range(1, s + 1):
        term = term @ N
        if exact:
            term = term / k
            if all(x == 0 for x in term.flat):
                return out
        else:
            term = term / k
        out = out + term
    if exact and any(x != 0 for x in (term @ N).flat):
        raise LinAlgError("matrix is not nilpotent")
    return out


def pascal(s: int) -> np.ndarray:
    """Upper triangular Pascal matrix ``exp(e_tilde(s))``."""
    return exp_nilpotent(e_tilde(s))


def pascal_binomial(s: int) -> np.ndarray:
    return as_exact([[comb(j, i) for j in range(s)] for i in range(s)])


def build_E_Theta(nodes):
    """Differentiation and extrapolation matrices ``E = V Et V^-1``, ``Theta = V P V^-1``."""
    c = check_nodes(nodes)
    V = vandermonde(c)
    Vi = inverse(V)
    exact = V.dtype == object
    Et = e_tilde(len(c), exact)
    P = exp_nilpotent(Et)
    return V @ Et @ Vi, V @ P @ Vi


@dataclass
class PeerMethod:
    """Coefficients of an ``s``-stage peer method ``Y_m - h G F_m = B Y_{m-1} + h A F_{m-1}``."""

    nodes: list
    G: np.ndarray
    B: np.ndarray
    A: np.ndarray | None = None
    order_sm1: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = check_nodes(self.nodes)
        s = len(self.nodes)
        for name in ("G", "B"):
            if getattr(self, name).shape != (s, s):
                raise ValueError(f"{name} must be {s}x{s}")
        if self.A is None:
            self.A = zeros(s) if self.G.dtype == object else np.zeros((s, s))
        elif self.A.shape != (s, s):
            raise ValueError(f"A must be {s}x{s}")

    @property
    def s(self) -> int:
        return len(self.nodes)

    @property
    def field(self) -> FieldSpec:
        probe = np.concatenate([self.G, self.B, self.A, np.array([self.nodes], dtype=object)])
        return field_of(probe)

    @property
    def stiffly_accurate(self) -> bool:
        return all(x == 0 for x in self.A.flat)

    @property
    def exact(self) -> bool:
        return self.G.dtype == object and self.B.dtype == object

    def E_Theta(self):
        if "ET" not in self._cache:
            self._cache["ET"] = build_E_Theta(self.nodes)
        return self._cache["ET"]

    def H(self) -> np.ndarray:
        if "H" not in self._cache:
            self._cache["H"] = inverse(self.G)
        return self._cache["H"]

    def order_residual(self) -> np.ndarray:
        E, Th = self.E_Theta()
        s = self.s
        I = eye(s) if self.exact else np.eye(s)
        return self.B - (I - self.G @ E) @ Th

    def preconsistency_residual(self) -> np.ndarray:
        one = np.array([Fraction(1)] * self.s, dtype=object) if self.exact else np.ones(self.s)
        return self.B @ one - one


def assemble_order_sm1(nodes, G: np.ndarray) -> PeerMethod:
    """Stiffly accurate method of order ``s-1``: ``B = (I - G E) Theta``, ``A = 0``."""
    E, Th = build_E_Theta(nodes)
    s = E.shape[0]
    if G.shape != (s, s):
        raise ValueError(f"G must be {s}x{s}")
    exact = G.dtype == object and E.dtype == object
    if not exact:
        E, Th, G = to_float_matrix(E), to_float_matrix(Th), to_float_matrix(G)
    I = eye(s) if exact else np.eye(s)
    B = (I - G @ E) @ Th
    m = PeerMethod(list(nodes), G, B, order_sm1=True)
    m._cache["ET"] = (E, Th)
    return m


def stability_matrix(m: PeerMethod, z: complex) -> np.ndarray:
    """``M(z) = (I - z G)^{-1} (B + z A)`` in complex double precision."""
    G = to_float_matrix(m.G).astype(complex)
    B = to_float_matrix(m.B).astype(complex)
    A = to_float_matrix(m.A).astype(complex)
    s = m.s
    lhs = np.eye(s) - z * G
    if np.linalg.cond(lhs) > POLE_COND:
        raise LinAlgError(f"z = {z} is (numerically) a pole of the stability matrix")
    return np.linalg.solve(lhs, B + z * A)


@dataclass
class WeightPair:
    """Weight matrices ``(Z, W)`` tagged with the basis they are expressed in.

    original: ``Z, W`` of the test matrix itself; hat: ``Zh = G^T Z G``,
    ``Wh = Theta^-T W Theta^-1``; nordsieck: ``V^T Zh V``, ``V^T Wh V``.
    """

    Z: np.ndarray
    W: np.ndarray
    representation: str = "original"

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        for name in ("Z", "W"):
            M = getattr(self, name)
            if M.shape[0] != M.shape[1] or not np.all(M == M.T):
                raise ValueError(f"{name} must be square and symmetric")


def _to_hat(m: PeerMethod, w: WeightPair) -> WeightPair:
    if w.representation == "hat":
        return w
    if w.representation == "original":
        _, Th = m.E_Theta()
        Thi = inverse(Th)
        return WeightPair(m.G.T @ w.Z @ m.G, Thi.T @ w.W @ Thi, "hat")
    V = vandermonde(m.nodes)
    Vi = inverse(V)
    return WeightPair(Vi.T @ w.Z @ Vi, Vi.T @ w.W @ Vi, "hat")


def _from_hat(m: PeerMethod, w: WeightPair, to: str) -> WeightPair:
    if to == "hat":
        return w
    if to == "original":
        _, Th = m.E_Theta()
        H = m.H()
        return WeightPair(H.T @ w.Z @ H, Th.T @ w.W @ Th, "original")
    V = vandermonde(m.nodes)
    return WeightPair(V.T @ w.Z @ V, V.T @ w.W @ V, "nordsieck")


def transform_weights(m: PeerMethod, w: WeightPair, to: str) -> WeightPair:
    """Exact change of representation; always routed through the hat form."""
    if to not in REPRESENTATIONS:
        raise ValueError(f"unknown representation {to!r}")
    if to == w.representation:
        return w
    return _from_hat(m, _to_hat(m, w), to)


def nordsieck_H(m: PeerMethod) -> np.ndarray:
    V = vandermonde(m.nodes)
    return inverse(V) @ m.H() @ V
