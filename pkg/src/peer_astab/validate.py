"""Floating point cross-checks of certified claims.

Nothing here certifies anything. These are independent numerical probes of
what an exact certificate promises: spectral radius of the stability matrix
over the left half plane, the weighted norm bound, numerical radii and zero
stability.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .linalg import LinAlgError, eig_float, to_float_matrix
from .peer import POLE_COND, PeerMethod, WeightPair, stability_matrix, transform_weights

log = logging.getLogger(__name__)

RHO_TOL = 1e-10


__all__ = [
    "SampleGrid",
    "ValidationReport",
    "default_grid",
    "numerical_radius",
    "sample_spectral_radius",
    "weighted_norm_bound",
    "write_csv",
    "zero_stability",
]


@dataclass(frozen=True)
class SampleGrid:
    """Points ``z = -x + i y`` on log grids, plus samples ``z = i y`` on the imaginary axis.

    ``real_axis = (a, b, n)`` gives ``x`` in ``[a, b]`` (``0 < a < b``);
    ``imag_axis = (c, d, m)`` gives ``y`` in ``[c, d]`` together with ``y = 0``.
    """

    real_axis: tuple = (1e-3, 1e3, 60)
    imag_axis: tuple = (1e-3, 1e3, 60)
    boundary: tuple = (1e-3, 1e3, 200)

    def __post_init__(self):
        for name in ("real_axis", "imag_axis", "boundary"):
            lo, hi, n = getattr(self, name)
            if n < 0 or (n and not (0 < lo <= hi)):
                raise ValueError(f"{name}: need 0 < lo <= hi and n >= 0")

    @staticmethod
    def _axis(lo, hi, n):
        return np.geomspace(lo, hi, int(n)) if n else np.empty(0)

    def points(self) -> np.ndarray:
        xs = self._axis(*self.real_axis)
        ys = np.concatenate([[0.0], self._axis(*self.imag_axis)]) if len(xs) else np.empty(0)
        inner = (-xs[:, None] + 1j * ys[None, :]).ravel()
        edge = 1j * self._axis(*self.boundary)
        return np.concatenate([inner, edge])

    def __len__(self):
        return len(self.points())

    @classmethod
    def parse(cls, text: str) -> SampleGrid:
        """``"a:b:n,c:d:m[,e:f:k]"`` for the real, imaginary and boundary axes."""
        parts = [p for p in text.split(",") if p.strip()]
        if len(parts) not in (2, 3):
            raise ValueError(f"grid spec {text!r} needs 2 or 3 comma separated axes")
        axes = []
        for p in parts:
            lo, hi, n = p.split(":")
            axes.append((float(lo), float(hi), int(n)))
        if len(axes) == 2:
            axes.append((axes[1][0], axes[1][1], 0))
        return cls(*axes)


def default_grid() -> SampleGrid:
    return SampleGrid()


@dataclass
class ValidationReport:
    max_spectral_radius: float | None = None
    argmax_z: complex | None = None
    samples: list = field(default_factory=list)
    skipped: int = 0
    max_weighted_norm: float | None = None
    numerical_radius: float | None = None
    zero_stable: bool | None = None

    def within(self, tol: float = RHO_TOL) -> bool:
        return self.max_spectral_radius is not None and self.max_spectral_radius <= 1 + tol


def spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(eig_float(M))))


def sample_spectral_radius(m: PeerMethod, grid: SampleGrid | None = None) -> ValidationReport:
    """Max of ``rho(M(z))`` over the grid, in a fixed enumeration order."""
    grid = default_grid() if grid is None else grid
    pts = grid.points()
    if len(pts) == 0:
        raise ValueError("empty sample grid")
    rep = ValidationReport()
    s = m.s
    G, B, A = (to_float_matrix(X).astype(complex) for X in (m.G, m.B, m.A))
    lhs = np.eye(s)[None] - pts[:, None, None] * G[None]
    ok = np.linalg.cond(lhs) <= POLE_COND
    rep.skipped = int(np.sum(~ok))
    for z in pts[~ok]:
        log.info("skipping pole z = %s", z)
    pts = pts[ok]
    if len(pts) == 0:
        raise ValueError("every grid point is a pole of the stability matrix")
    M = np.linalg.solve(lhs[ok], B[None] + pts[:, None, None] * A[None])
    rho = np.max(np.abs(np.linalg.eigvals(M)), axis=1)
    rep.samples = [(complex(z), float(r)) for z, r in zip(pts, rho)]
    k = int(np.argmax(rho))
    rep.max_spectral_radius, rep.argmax_z = float(rho[k]), complex(pts[k])
    return rep


def write_csv(report: ValidationReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_z", "im_z", "spectral_radius"])
        for z, r in report.samples:
            w.writerow([repr(z.real), repr(z.imag), repr(r)])


def _sqrt_pd(W: np.ndarray):
    vals, vecs = np.linalg.eigh(W)
    if vals.min() <= 0:
        raise ValueError(f"W is not positive definite (min eigenvalue {vals.min():.3e})")
    root = (vecs * np.sqrt(vals)) @ vecs.T
    iroot = (vecs / np.sqrt(vals)) @ vecs.T
    return root, iroot


def weighted_norm_bound(m: PeerMethod, w: WeightPair, grid: SampleGrid | None = None) -> float:
    """Max over the grid of ``||W^(1/2) M(z) W^(-1/2)||_2`` with the original-form ``W``."""
    grid = default_grid() if grid is None else grid
    if w.representation != "original":
        w = transform_weights(m, w, "original")
    Wf = to_float_matrix(w.W)
    root, iroot = _sqrt_pd((Wf + Wf.T) / 2)
    best = 0.0
    for z in grid.points():
        try:
            M = stability_matrix(m, z)
        except LinAlgError:
            continue
        best = max(best, float(np.linalg.norm(root @ M @ iroot, 2)))
    return best


def _field_max(A: np.ndarray, theta: float) -> float:
    R = np.exp(1j * theta) * A
    return float(np.linalg.eigvalsh((R + R.conj().T) / 2)[-1])


def numerical_radius(U, N=None, *, points: int = 512, rounds: int = 3) -> float:
    """``r(U, N) = max |x^* U x| / x^* N x``, by Cholesky reduction ``N = L L^*``.

    ``r = max_theta lambda_max(Re(e^(i theta) L^-1 U L^-*))``; a uniform
    theta grid is refined around the best angle ``rounds`` times.
    """
    A = np.asarray(to_float_matrix(U) if np.asarray(U).dtype == object else U, dtype=complex)
    if N is not None:
        Nf = np.asarray(to_float_matrix(N) if np.asarray(N).dtype == object else N, dtype=complex)
        try:
            L = sla.cholesky((Nf + Nf.conj().T) / 2, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ValueError("N must be positive definite") from exc
        A = sla.solve_triangular(L, A, lower=True)
        A = sla.solve_triangular(L, A.conj().T, lower=True).conj().T
    thetas = np.linspace(0, 2 * np.pi, points, endpoint=False)
    vals = np.array([_field_max(A, t) for t in thetas])
    k = int(np.argmax(vals))
    best_t, best = thetas[k], vals[k]
    width = 2 * np.pi / points
    for _ in range(rounds):
        local = np.linspace(best_t - width, best_t + width, 65)
        lv = np.array([_field_max(A, t) for t in local])
        j = int(np.argmax(lv))
        if lv[j] > best:
            best, best_t = lv[j], local[j]
        width /= 16
    return float(best)


def zero_stability(m_or_B, *, tol: float = RHO_TOL, defect_tol: float = 1e-8) -> bool:
    """All eigenvalues of ``B`` in the closed unit disc, those near the circle non-defective.

    Defectiveness is judged by the numerical rank of ``B - lambda I`` against
    the eigenvalue multiplicity (relative threshold ``defect_tol``), a heuristic.
    """
    B = m_or_B.B if isinstance(m_or_B, PeerMethod) else m_or_B
    Bf = np.asarray(to_float_matrix(B) if np.asarray(B).dtype == object else B, dtype=complex)
    s = Bf.shape[0]
    ev = eig_float(Bf)
    if np.any(np.abs(ev) > 1 + tol):
        return False
    on_circle = [lam for lam in ev if abs(lam) >= 1 - defect_tol]
    seen = []
    for lam in on_circle:
        if any(abs(lam - mu) < 1e-6 for mu in seen):
            continue
        seen.append(lam)
        mult = int(np.sum(np.abs(ev - lam) < 1e-6))
        sv = np.linalg.svd(Bf - lam * np.eye(s), compute_uv=False)
        nullity = int(np.sum(sv <= defect_tol * max(1.0, sv[0])))
        if nullity < mult:
            return False
    return True
