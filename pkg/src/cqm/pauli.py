"""Pauli algebra, the vector/endomorphism dictionary, and the spin connection.

Conventions (see CONVENTIONS.md):
  sigma_1 = [[0,1],[1,0]], sigma_2 = [[0,-i],[i,0]], sigma_3 = [[1,0],[0,-1]];
  xi_0 = i*1, xi_i = -(i/2) sigma_i, so [xi_i, xi_j] = eps_ijk xi_k with
  eps_123 = +1 and gtilde(A,B) = -2 Tr(AB) makes (xi_i) orthonormal.
The vector map Sigma sends orthonormal-frame components v^a to v^a xi_a and
intertwines the cross product with the commutator.
"""

from __future__ import annotations

import numpy as np

from .jets import Jet

SIGMA0 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA = (SIGMA1, SIGMA2, SIGMA3)

XI0 = 1j * SIGMA0
XI = tuple(-0.5j * s for s in SIGMA)  # xi_1, xi_2, xi_3
XI_ALL = (XI0,) + XI


def _build_eps() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


EPS = _build_eps()


def pauli_constants():
    """The fixed matrices and the epsilon table: (sigma_1..3, xi_0..3, eps)."""
    return SIGMA, XI_ALL, EPS


class NotInL0(ValueError):
    """Input matrix is not traceless anti-Hermitian."""


class NotAntisymmetric(ValueError):
    """Input endomorphism is not antisymmetric."""


class InconsistentSystem(ValueError):
    """Frame coefficients are not antisymmetric within tolerance."""


def is_anti_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m + m.conj().T)) <= tol)


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_traceless(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(abs(np.trace(m)) <= tol)


def pauli_map(v) -> np.ndarray:
    """Sigma(v) = v^a xi_a for orthonormal-frame components v."""
    v = np.asarray(v, dtype=float)
    return v[0] * XI[0] + v[1] * XI[1] + v[2] * XI[2]


def pauli_unmap(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Invert Sigma via gtilde: v^a = -2 Tr(m xi_a)."""
    if not (is_traceless(m, tol) and is_anti_hermitian(m, tol)):
        raise NotInL0("matrix is not a traceless anti-Hermitian endomorphism")
    return np.array([(-2.0 * np.trace(m @ XI[a])).real for a in range(3)])


def gtilde(a: np.ndarray, b: np.ndarray) -> float:
    return float((-2.0 * np.trace(a @ b)).real)


def triangle(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """(A)^{ij} eps_{ijk}: the raw epsilon contraction of an antisymmetric
    frame endomorphism; -1/2 of it is the Lie-algebra isomorphism onto
    cross-product vectors."""
    a = np.asarray(a, dtype=float)
    if np.max(np.abs(a + a.T)) > tol * (1.0 + np.max(np.abs(a))):
        raise NotAntisymmetric("endomorphism is not antisymmetric")
    return np.einsum("ij,ijk->k", a, EPS)


def axis_vector(a: np.ndarray) -> np.ndarray:
    """Vector w with a = ad(w), i.e. a(v) = w x v, for antisymmetric a."""
    return -0.5 * triangle(a)


def _eps_axis_jets(a) -> list:
    # -1/2 eps contraction on a 3x3 nested list with jet (or float) entries.
    out = []
    for k in range(3):
        acc = None
        for i in range(3):
            for j in range(3):
                if EPS[i, j, k] == 0.0:
                    continue
                term = a[i][j] * (-0.5 * EPS[i, j, k])
                acc = term if acc is None else acc + term
        out.append(acc)
    return out


# Linear system for the spin-connection coefficients: Ctilde^k_j = C^i eps_ijk.
# Solved through a precomputed pseudo-inverse so no hand epsilon-inversion
# signs enter; the curvature identity test pins the convention.
def _build_solver() -> np.ndarray:
    m = np.zeros((9, 3))
    for row, (k, j) in enumerate((k, j) for k in range(3) for j in range(3)):
        for i in range(3):
            m[row, i] = EPS[i, j, k]
    return np.linalg.pinv(m)


_EPS_PINV = _build_solver()


class SpinConnection:
    """Trace-free Hermitian spin connection induced by a spacetime connection.

    Coefficients C_lambda^i are real; C_lambda^0 = 0 (the gauge in which the
    induced determinant-line connection is flat).  The matrix coefficients are
    C_lambda^i xi_i, anti-Hermitian by construction.
    """

    trace_free = True

    def __init__(self, bg, which: str):
        self.bg = bg
        self.which = which

    def coeffs(self, point, order: int) -> list:
        """C_lambda^a jets, shape [4][3], at the given order."""
        return self.coeffs_from(self.bg.jets(point), order)

    def coeffs_from(self, bundle, order: int) -> list:
        ktilde = bundle.ktilde(self.which, order)
        out = []
        for lam in range(4):
            kt = ktilde[lam]
            vec = [kt[k][j] for k in range(3) for j in range(3)]
            vals = np.array([v.value for v in vec])
            c = []
            for i in range(3):
                acc = Jet.const(0.0, order)
                for row in range(9):
                    w = _EPS_PINV[i, row]
                    if w != 0.0:
                        acc = acc + vec[row] * w
                c.append(acc)
            # Residual of the 9-equation system; nonzero means Ktilde was not
            # antisymmetric (non-metric input connection).
            recon = np.zeros(9)
            for row, (k, j) in enumerate((k, j) for k in range(3) for j in range(3)):
                recon[row] = sum(EPS[i, j, k] * c[i].value for i in range(3))
            if np.max(np.abs(recon - vals)) > 1e-8 * (1.0 + np.max(np.abs(vals))):
                raise InconsistentSystem(
                    f"frame coefficients not antisymmetric at lambda={lam} (which={self.which})"
                )
            out.append(c)
        return out

    def coeff_values(self, point) -> np.ndarray:
        c = self.coeffs(point, 0)
        return np.array([[c[lam][a].value for a in range(3)] for lam in range(4)])

    def matrix_coeff(self, point, lam: int) -> np.ndarray:
        """C_lambda^A_B = C_lambda^i xi_i as a numeric 2x2 matrix."""
        c = self.coeff_values(point)
        return sum(c[lam, a] * XI[a] for a in range(3))


def spin_connection_from(bg, which: str) -> SpinConnection:
    if which not in ("charge", "moment", "grav"):
        raise ValueError(f"unknown coupling {which!r}")
    return SpinConnection(bg, which)


def spin_curvature(conn: SpinConnection, point) -> np.ndarray:
    """R_{lambda mu}^nu components (nu = 0..3); nu = 0 vanishes in the
    trace-free gauge.  R^k = -d_lam C_mu^k + d_mu C_lam^k + C_lam^i C_mu^j eps_ijk."""
    jets = conn.coeffs(point, 1)
    return spin_curvature_from_jets(jets)


def spin_curvature_from_jets(cjets, out_order: int = 0) -> np.ndarray:
    r = np.zeros((4, 4, 4))
    for lam in range(4):
        for mu in range(lam + 1, 4):
            for k in range(3):
                term = (-cjets[mu][k].derive(lam) + cjets[lam][k].derive(mu)).value
                quad = 0.0
                for i in range(3):
                    for j in range(3):
                        if EPS[i, j, k] != 0.0:
                            quad += cjets[lam][i].value * cjets[mu][j].value * EPS[i, j, k]
                r[lam, mu, 1 + k] = term + quad
                r[mu, lam, 1 + k] = -(term + quad)
    return r


def spin_curvature_jets(cjets, order: int):
    """Same as spin_curvature but returning jets of the given order; cjets
    must be at order+1."""
    r = [[[None] * 4 for _ in range(4)] for _ in range(4)]
    zero = None
    for lam in range(4):
        for mu in range(4):
            for nu in range(4):
                if lam == mu or nu == 0:
                    if zero is None:
                        zero = cjets[0][0].truncate(order) * 0.0
                    r[lam][mu][nu] = zero
    for lam in range(4):
        for mu in range(lam + 1, 4):
            for k in range(3):
                acc = -cjets[mu][k].derive(lam) + cjets[lam][k].derive(mu)
                for i in range(3):
                    for j in range(3):
                        if EPS[i, j, k] != 0.0:
                            acc = acc + cjets[lam][i].truncate(order) * cjets[mu][j].truncate(order) * EPS[i, j, k]
                r[lam][mu][1 + k] = acc
                r[mu][lam][1 + k] = -acc
    return r
