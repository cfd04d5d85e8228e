"""The classical Galileian arena.

A Background bundles the spatial metric g_ij (L^2-scaled), the gravitational
spacetime connection coefficients K^i_{lm} (with vanishing time row), the
electromagnetic 2-form F and the coupling constants.  Everything downstream
(joined connections, orthonormal frames, curvatures, the cosymplectic table,
observer pullbacks, the magnetic field) is evaluated pointwise through jets,
so derivatives are exact to the requested order.

Chart conventions: a single global chart (x0..x3), dimensionless coordinates,
dt = u0 dx0, reference observer = chart-adapted (zero velocity components).
Spatial chart indices run 1..3; arrays use 0..2 for them.  2-form component
tables store honest evaluations w(d_a, d_b); the cosymplectic table follows
the expansion documented in CONVENTIONS.md, and observer pullbacks of it give
the closed 2-form Phi[o] directly (no extra doubling).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import fieldlang as fl
from .fieldlang import FieldDef
from .jets import Jet
from .pauli import EPS, _eps_axis_jets
from .units import (
    BFIELD_FRAME_DIM,
    CHARGE_DIM,
    EM_FIELD_DIM,
    HBAR_DIM,
    MASS,
    METRIC_DIM,
    MOMENT_DIM,
    TIME,
    DimensionMismatch,
    Gauge,
    ScaledReal,
)


class NotPositiveDefinite(ValueError):
    """Metric fails positive-definiteness at an evaluation point."""


def as_point(x) -> np.ndarray:
    p = np.asarray(x, dtype=float).reshape(4)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite evaluation point {x!r}")
    return p


@dataclass(frozen=True)
class PhasePoint:
    """Spacetime point, velocity coordinates x^i_0, and orthonormal-frame
    spin components."""

    x: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    s: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "x", as_point(self.x))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float).reshape(3))
        if not (np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.s))):
            raise ValueError("non-finite phase point data")


@dataclass(frozen=True)
class Observer:
    """Chart components o^i_0 of an observer; the reference observer has all
    components identically zero."""

    components: tuple

    @classmethod
    def reference(cls) -> "Observer":
        return cls(tuple(fl.zero_field(f"o{i}") for i in range(3)))

    @property
    def is_reference(self) -> bool:
        return all(
            getattr(c, "constant", False) and c((0.0, 0.0, 0.0, 0.0)) == 0.0
            for c in self.components
        )

    def velocity(self, point) -> np.ndarray:
        return np.array([c(point) for c in self.components])

    def jets(self, point, order: int) -> list:
        return [c.eval_jet(point, order) for c in self.components]


@dataclass(frozen=True)
class Constants:
    m: ScaledReal
    q: ScaledReal
    hbar: ScaledReal
    mu: ScaledReal
    u0: ScaledReal
    extras: Mapping[str, ScaledReal] = field(default_factory=dict)

    def __post_init__(self):
        expected = {"m": MASS, "q": CHARGE_DIM, "hbar": HBAR_DIM, "mu": MOMENT_DIM, "u0": TIME}
        for name, dim in expected.items():
            got = getattr(self, name).dim
            if got != dim:
                raise DimensionMismatch(f"constant {name!r} must have dimension {dim}, got {got}")

    def table(self) -> dict:
        base = {"m": self.m, "q": self.q, "hbar": self.hbar, "mu": self.mu, "u0": self.u0}
        base.update(self.extras)
        return base

    @property
    def metric_prefactor(self) -> float:
        """m u^0 / hbar, the velocity-form weight; dimension L^-2."""
        return self.m.value / (self.hbar.value * self.u0.value)


@dataclass(frozen=True)
class FramePacket:
    """Orthonormal triad e_a^i (stored as e[i][a]), its inverse e^a_i, and the
    frame coefficients Ktilde_lambda^a_b of the restricted connection."""

    e: list
    einv: list
    ktilde: list


class Background:
    """Immutable chart-level description of the classical fields."""

    def __init__(
        self,
        g: Sequence[Sequence[FieldDef]],
        kgrav: Mapping[tuple, FieldDef],
        f_em: Mapping[tuple, FieldDef],
        constants: Constants,
        gauge: Gauge = Gauge(),
    ):
        self.g = [[g[i][j] for j in range(3)] for i in range(3)]
        for i in range(3):
            for j in range(3):
                if self.g[i][j].dim != METRIC_DIM:
                    raise DimensionMismatch(f"metric entry g[{i}][{j}] must have dimension {METRIC_DIM}")
        # kgrav keyed by (i, lam, mu) with i in 1..3 upper, lam <= mu; symmetric storage.
        self.kgrav = {}
        for (i, lam, mu), fld in kgrav.items():
            key = (i, min(lam, mu), max(lam, mu))
            self.kgrav[key] = fld
        # F keyed by (lam, mu), lam < mu.
        self.f_em = {}
        for (lam, mu), fld in f_em.items():
            if lam >= mu:
                raise ValueError("F components must be keyed with lam < mu")
            if fld.dim != EM_FIELD_DIM:
                raise DimensionMismatch(f"F[{lam}{mu}] must have dimension {EM_FIELD_DIM}")
            self.f_em[(lam, mu)] = fld
        self.constants = constants
        self.gauge = gauge
        # Sanity: coupling combinations must come out dimensionless.
        c = constants
        for combo in (
            c.q * c.u0 / c.m * ScaledReal(1.0, EM_FIELD_DIM / METRIC_DIM),
            c.mu * c.u0 * ScaledReal(1.0, EM_FIELD_DIM / METRIC_DIM),
            ScaledReal(c.metric_prefactor, MASS / (HBAR_DIM * TIME)) * ScaledReal(1.0, METRIC_DIM),
            c.mu * c.u0 * ScaledReal(1.0, BFIELD_FRAME_DIM),
        ):
            if not combo.dim.is_dimensionless:
                raise DimensionMismatch(f"coupling combination has residual dimension {combo.dim}")
        self._jet_cache: dict = {}

    # -- pointwise jet bundles ----------------------------------------------

    def jets(self, point) -> "BackgroundJets":
        key = tuple(as_point(point))
        bundle = self._jet_cache.get(key)
        if bundle is None:
            if len(self._jet_cache) > 256:
                self._jet_cache.clear()
            bundle = BackgroundJets(self, np.array(key))
            self._jet_cache[key] = bundle
        return bundle

    @property
    def fields_constant(self) -> bool:
        """True when g, Kgrav and F are all constant expressions."""
        entries = [e for row in self.g for e in row]
        entries += list(self.kgrav.values()) + list(self.f_em.values())
        return all(getattr(e, "constant", False) for e in entries)

    # -- public operations ---------------------------------------------------

    def joined_connection(self, which: str) -> Callable:
        """Evaluator returning the joined connection coefficient jets
        K[lam][i][mu] at a point (i = upper spatial index - 1)."""

        def evaluate(point, order: int = 0):
            return self.jets(point).k_joined(which, order)

        return evaluate

    def orthonormal_frame(self, point, order: int = 0, which: str = "grav") -> FramePacket:
        b = self.jets(point)
        e, einv = b.frame(order)
        return FramePacket(e=e, einv=einv, ktilde=b.ktilde(which, order))

    def vertical_curvature_rho(self, which: str, point):
        """(Rcheck, rho): frame curvature values of the restricted connection
        and its axial covector rho_{lam mu k} (so that Rcheck = ad(rho))."""
        b = self.jets(point)
        rcheck_jets = b.rcheck(which, 0)
        rho_jets = b.rho(which, 0)
        rcheck = np.array(
            [[[[rcheck_jets[l][m][a][c].value for c in range(3)] for a in range(3)] for m in range(4)] for l in range(4)]
        )
        rho = np.array([[[rho_jets[l][m][k].value for k in range(3)] for m in range(4)] for l in range(4)])
        return rcheck, rho

    def cosymplectic_and_gamma(self, p: PhasePoint):
        """Numeric component table of the cosymplectic form over the basis
        (dx^0..dx^3, dx^1_0..dx^3_0) and the second-order connection gamma^i."""
        b = self.jets(p.x)
        omega_jets = b.omega_table([Jet.const(v, 1) for v in p.v], 0)
        omega = np.array([[omega_jets[a][bb].value for bb in range(7)] for a in range(7)])
        k = b.k_joined("charge", 0)
        kval = [[[k[lam][i][mu].value for mu in range(4)] for i in range(3)] for lam in range(4)]
        gamma = np.zeros(3)
        for i in range(3):
            acc = kval[0][i][0]
            for j in range(3):
                acc += 2.0 * kval[0][i][j + 1] * p.v[j]
                for h in range(3):
                    acc += kval[h + 1][i][j + 1] * p.v[h] * p.v[j]
            gamma[i] = acc
        return omega, gamma

    def observer_phi(self, o: Observer, point, order: int = 0):
        """Phi[o]: the closed 2-form obtained by pulling the cosymplectic
        table back along the observer section; 4x4 antisymmetric jets."""
        b = self.jets(point)
        return b.phi_observer(o, order)

    def magnetic_field(self, point) -> list:
        """Orthonormal-frame components B^a = 1/2 eps^{abc} Fcheck_{bc}."""
        b = self.jets(point)
        jets = b.magnetic(0)
        return [ScaledReal(j.value, BFIELD_FRAME_DIM) for j in jets]

    def validate(self, samples: Sequence) -> dict:
        """Residuals of the spacetime-connection axioms at sample points."""
        res = {"metricity": 0.0, "torsion": 0.0, "curvature_symmetry": 0.0, "dF": 0.0}
        for x in samples:
            b = self.jets(x)
            g1 = b.metric(1)
            k = b.kgrav(0)
            # nabla_lam g_ij = d_lam g_ij - K_lam^h_i g_hj - K_lam^h_j g_ih
            g0 = b.metric(0)
            for lam in range(4):
                for i in range(3):
                    for j in range(3):
                        r = g1[i][j].derive(lam).value
                        for h in range(3):
                            r -= k[lam][h][i + 1].value * g0[h][j].value
                            r -= k[lam][h][j + 1].value * g0[i][h].value
                        res["metricity"] = max(res["metricity"], abs(r))
            # pair symmetry of the all-spatial curvature R_ijhk = R_hkij
            riem = b.riemann_lowered_spatial()
            for i in range(3):
                for j in range(3):
                    for h in range(3):
                        for kk in range(3):
                            res["curvature_symmetry"] = max(
                                res["curvature_symmetry"], abs(riem[i, j, h, kk] - riem[h, kk, i, j])
                            )
            f1 = b.f_jets(1)
            for lam in range(4):
                for mu in range(lam + 1, 4):
                    for nu in range(mu + 1, 4):
                        r = (
                            f1[lam][mu].derive(nu).value
                            + f1[mu][nu].derive(lam).value
                            + f1[nu][lam].derive(mu).value
                        )
                        res["dF"] = max(res["dF"], abs(r))
        return res


# ---------------------------------------------------------------------------


def _zeros(shape, order):
    if not shape:
        return Jet.const(0.0, order)
    return [_zeros(shape[1:], order) for _ in range(shape[0])]


class BackgroundJets:
    """All derived background quantities at one point, as jets, with caching.

    Each accessor takes the jet order of its *output*; primitives are pulled
    at whatever deeper order the derivative chain needs.
    """

    def __init__(self, bg: Background, point: np.ndarray):
        self.bg = bg
        self.point = point
        self._cache: dict = {}

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- primitives ----------------------------------------------------------

    def metric(self, order: int) -> list:
        return self._get(("g", order), lambda: [
            [self.bg.g[i][j].eval_jet(self.point, order) for j in range(3)] for i in range(3)
        ])

    def f_jets(self, order: int) -> list:
        def build():
            f = _zeros((4, 4), order)
            for (lam, mu), fld in self.bg.f_em.items():
                j = fld.eval_jet(self.point, order)
                f[lam][mu] = j
                f[mu][lam] = -j
            return f
        return self._get(("F", order), build)

    def kgrav(self, order: int) -> list:
        def build():
            k = _zeros((4, 3, 4), order)
            for (i, lam, mu), fld in self.bg.kgrav.items():
                j = fld.eval_jet(self.point, order)
                k[lam][i - 1][mu] = j
                if lam != mu:
                    k[mu][i - 1][lam] = j
            return k
        return self._get(("kgrav", order), build)

    # -- metric algebra ------------------------------------------------------

    def det(self, order: int) -> Jet:
        def build():
            g = self.metric(order)
            return (
                g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
                - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
            )
        return self._get(("det", order), build)

    def sqrt_det(self, order: int) -> Jet:
        def build():
            d = self.det(order)
            if d.value <= 0.0:
                raise NotPositiveDefinite(f"det g = {d.value} at {self.point.tolist()}")
            return d.sqrt()
        return self._get(("sqrtg", order), build)

    def metric_inv(self, order: int) -> list:
        def build():
            g = self.metric(order)
            det = self.det(order)
            if det.value <= 0.0:
                raise NotPositiveDefinite(f"det g = {det.value} at {self.point.tolist()}")
            inv_det = det.recip()
            adj = [
                [g[1][1] * g[2][2] - g[1][2] * g[2][1],
                 g[0][2] * g[2][1] - g[0][1] * g[2][2],
                 g[0][1] * g[1][2] - g[0][2] * g[1][1]],
                [g[1][2] * g[2][0] - g[1][0] * g[2][2],
                 g[0][0] * g[2][2] - g[0][2] * g[2][0],
                 g[0][2] * g[1][0] - g[0][0] * g[1][2]],
                [g[1][0] * g[2][1] - g[1][1] * g[2][0],
                 g[0][1] * g[2][0] - g[0][0] * g[2][1],
                 g[0][0] * g[1][1] - g[0][1] * g[1][0]],
            ]
            return [[adj[i][j] * inv_det for j in range(3)] for i in range(3)]
        return self._get(("ginv", order), build)

    def frame(self, order: int):
        """Triad e (as e[i][a] = e_a^i) and inverse e^a_i (einv[a][i]) from the
        Cholesky factor of g, positive diagonal, positive orientation."""
        def build():
            g = self.metric(order)
            try:
                l00 = g[0][0].sqrt()
            except Exception:
                raise NotPositiveDefinite(f"g00 = {g[0][0].value} at {self.point.tolist()}")
            l10 = g[1][0] / l00
            l20 = g[2][0] / l00
            d1 = g[1][1] - l10 * l10
            if d1.value <= 0.0:
                raise NotPositiveDefinite(f"metric not positive definite at {self.point.tolist()}")
            l11 = d1.sqrt()
            l21 = (g[2][1] - l20 * l10) / l11
            d2 = g[2][2] - l20 * l20 - l21 * l21
            if d2.value <= 0.0:
                raise NotPositiveDefinite(f"metric not positive definite at {self.point.tolist()}")
            l22 = d2.sqrt()
            zero = Jet.const(0.0, order)
            lmat = [[l00, zero, zero], [l10, l11, zero], [l20, l21, l22]]
            # forward substitution for M = L^{-1} (lower triangular)
            m00 = l00.recip()
            m11 = l11.recip()
            m22 = l22.recip()
            m10 = -(l10 * m00) * m11
            m20 = -(l20 * m00 + l21 * m10) * m22
            m21 = -(l21 * m11) * m22
            m = [[m00, zero, zero], [m10, m11, zero], [m20, m21, m22]]
            # e_a^i = (L^-T)[i][a] = M[a][i]; e^a_i = (L^T)[a][i] = L[i][a]
            e = [[m[a][i] for a in range(3)] for i in range(3)]
            einv = [[lmat[i][a] for i in range(3)] for a in range(3)]
            return e, einv
        return self._get(("frame", order), build)

    # -- connections ---------------------------------------------------------

    def k_joined(self, which: str, order: int) -> list:
        def build():
            kg = self.kgrav(order)
            if which == "grav":
                return kg
            f = self.f_jets(order)
            ginv = self.metric_inv(order)
            c = self.bg.constants
            if which == "charge":
                c0k = c.q.value * c.u0.value / (2.0 * c.m.value)
                c00 = c.q.value * c.u0.value / c.m.value
            elif which == "moment":
                # Opposite sign relative to the charge sector: fixed by the
                # classical precession law and the quantum convention lock.
                c0k = -c.mu.value * c.u0.value
                c00 = -2.0 * c.mu.value * c.u0.value
            else:
                raise ValueError(f"unknown coupling {which!r}")
            fup = [[None] * 4 for _ in range(3)]
            for i in range(3):
                for mu in range(4):
                    acc = None
                    for h in range(3):
                        term = ginv[i][h] * f[h + 1][mu]
                        acc = term if acc is None else acc + term
                    fup[i][mu] = acc
            k = [[[kg[lam][i][mu] for mu in range(4)] for i in range(3)] for lam in range(4)]
            for i in range(3):
                k[0][i][0] = k[0][i][0] + fup[i][0] * c00
                for kk in range(3):
                    extra = fup[i][kk + 1] * c0k
                    k[0][i][kk + 1] = k[0][i][kk + 1] + extra
                    k[kk + 1][i][0] = k[kk + 1][i][0] + extra
            return k
        return self._get(("K", which, order), build)

    def ktilde(self, which: str, order: int) -> list:
        """Frame coefficients Ktilde_lam^a_b = e^a_i (d_lam e_b^i + K_lam^i_j e_b^j)."""
        def build():
            e1, _ = self.frame(order + 1)
            _, einv = self.frame(order)
            e0 = [[e1[i][a].truncate(order) for a in range(3)] for i in range(3)]
            k = self.k_joined(which, order)
            kt = []
            for lam in range(4):
                mat = []
                for a in range(3):
                    row = []
                    for b in range(3):
                        acc = None
                        for i in range(3):
                            inner = e1[i][b].derive(lam)
                            for j in range(3):
                                inner = inner + k[lam][i][j + 1] * e0[j][b]
                            term = einv[a][i] * inner
                            acc = term if acc is None else acc + term
                        row.append(acc)
                    mat.append(row)
                kt.append(mat)
            return kt
        return self._get(("ktilde", which, order), build)

    def rcheck(self, which: str, order: int) -> list:
        """Frame curvature of the restricted connection:
        R_{lam mu}^a_b = -d_lam Kt_mu + d_mu Kt_lam + [Kt_lam, Kt_mu]."""
        def build():
            kt1 = self.ktilde(which, order + 1)
            kt0 = [[[kt1[l][a][b].truncate(order) for b in range(3)] for a in range(3)] for l in range(4)]
            r = [[None] * 4 for _ in range(4)]
            zero = _zeros((3, 3), order)
            for lam in range(4):
                r[lam][lam] = zero
            for lam in range(4):
                for mu in range(lam + 1, 4):
                    mat = []
                    for a in range(3):
                        row = []
                        for b in range(3):
                            acc = -kt1[mu][a][b].derive(lam) + kt1[lam][a][b].derive(mu)
                            for cc in range(3):
                                acc = acc + kt0[lam][a][cc] * kt0[mu][cc][b]
                                acc = acc - kt0[mu][a][cc] * kt0[lam][cc][b]
                            row.append(acc)
                        mat.append(row)
                    r[lam][mu] = mat
                    r[mu][lam] = [[-mat[a][b] for b in range(3)] for a in range(3)]
            return r
        return self._get(("rcheck", which, order), build)

    def rho(self, which: str, order: int) -> list:
        """Axial covector of the frame curvature: rho_{lam mu k} with
        Rcheck_{lam mu} = ad(rho_{lam mu}); equals the spin-connection
        curvature vector built from the same connection."""
        def build():
            rc = self.rcheck(which, order)
            out = [[None] * 4 for _ in range(4)]
            for lam in range(4):
                for mu in range(4):
                    out[lam][mu] = _eps_axis_jets(rc[lam][mu])
            return out
        return self._get(("rho", which, order), build)

    def riemann_lowered_spatial(self) -> np.ndarray:
        """R_{ij h k} = g_{hm} R^m_{k ij} of the gravitational connection,
        all-spatial slots, numeric, in the standard curvature-operator
        convention (the one under which a Levi-Civita connection has the
        pair symmetry R_{ijhk} = R_{hkij})."""
        k1 = self.kgrav(1)
        k0 = self.kgrav(0)
        g0 = self.metric(0)
        riem = np.zeros((3, 3, 3, 3))
        for i in range(3):
            for j in range(3):
                for m in range(3):
                    for kk in range(3):
                        r = k1[j + 1][m][kk + 1].derive(i + 1).value - k1[i + 1][m][kk + 1].derive(j + 1).value
                        for h in range(3):
                            r += k0[i + 1][m][h + 1].value * k0[j + 1][h][kk + 1].value
                            r -= k0[j + 1][m][h + 1].value * k0[i + 1][h][kk + 1].value
                        riem[i, j, :, kk] += r * np.array([g0[h2][m].value for h2 in range(3)])
        return riem

    def magnetic(self, order: int) -> list:
        def build():
            f = self.f_jets(order)
            e, _ = self.frame(order)
            fcheck = [[None] * 3 for _ in range(3)]
            for a in range(3):
                for b in range(3):
                    acc = None
                    for i in range(3):
                        for j in range(3):
                            term = f[i + 1][j + 1] * e[i][a] * e[j][b]
                            acc = term if acc is None else acc + term
                    fcheck[a][b] = acc
            out = []
            for a in range(3):
                acc = None
                for b in range(3):
                    for c in range(3):
                        if EPS[a, b, c] == 0.0:
                            continue
                        term = fcheck[b][c] * (0.5 * EPS[a, b, c])
                        acc = term if acc is None else acc + term
                out.append(acc)
            return out
        return self._get(("B", order), build)

    # -- cosymplectic sector ---------------------------------------------------

    def phi_ref(self, order: int) -> list:
        """Phi[reference]: pullback of the cosymplectic table on the zero
        section; 4x4 antisymmetric jets."""
        def build():
            g = self.metric(order)
            k = self.k_joined("charge", order)
            c = self.bg.constants.metric_prefactor
            phi = _zeros((4, 4), order)
            for j in range(3):
                acc = None
                for i in range(3):
                    term = g[i][j] * k[0][i][0]
                    acc = term if acc is None else acc + term
                phi[0][j + 1] = acc * (-c)
                phi[j + 1][0] = acc * c
            for h in range(3):
                for j in range(h + 1, 3):
                    acc = None
                    for i in range(3):
                        term = g[i][j] * k[h + 1][i][0] - g[i][h] * k[j + 1][i][0]
                        acc = term if acc is None else acc + term
                    phi[h + 1][j + 1] = acc * (-c)
                    phi[j + 1][h + 1] = acc * c
            return phi
        return self._get(("phi_ref", order), build)

    def omega_table(self, v_jets: list, order: int) -> list:
        """Cosymplectic component table over (dx^0..dx^3, dv^1..dv^3), jets at
        the given order; v_jets are the velocity coordinates (constant jets
        for a phase point, observer component jets for a pullback).

        The table is assembled as d Theta + Omega_K with
          Theta   = c (g_ij v^j dx^i - 1/2 g_ij v^i v^j dx^0),
          Omega_K = -c g_ij K_lam^i_0 dx^lam ^ dx^j   (joined K),
        which is closed whenever dF = 0 and the free part of the connection
        time slots is closed; it reproduces the adapted-coordinate expansion
        of the cosymplectic form and its observer pullbacks.
        """
        c = self.bg.constants.metric_prefactor
        g1 = self.metric(order + 1)
        g0 = [[g1[i][j].truncate(order) for j in range(3)] for i in range(3)]
        k = self.k_joined("charge", order)
        v = [vj.truncate(order) for vj in v_jets]
        zero = Jet.const(0.0, order)
        omega = [[zero for _ in range(7)] for _ in range(7)]

        def add(a, b, w):
            omega[a][b] = omega[a][b] + w
            omega[b][a] = omega[b][a] - w

        for i in range(3):
            for j in range(3):
                # c g_ij dv^j ^ dx^i
                add(4 + j, i + 1, g0[i][j] * c)
                # -c g_ij v^i dv^j ^ dx^0
                add(4 + j, 0, g0[i][j] * v[i] * (-c))
                for lam in range(4):
                    dg = g1[i][j].derive(lam)
                    # c (d_lam g_ij) v^j dx^lam ^ dx^i
                    add(lam, i + 1, dg * v[j] * c)
                    # -c/2 (d_lam g_ij) v^i v^j dx^lam ^ dx^0
                    add(lam, 0, dg * v[i] * v[j] * (-0.5 * c))
                    # Omega_K: -c g_ij K_lam^i_0 dx^lam ^ dx^j
                    add(lam, j + 1, g0[i][j] * k[lam][i][0] * (-c))
        return omega

    def phi_observer(self, o: Observer, order: int) -> list:
        if o.is_reference:
            return self.phi_ref(order)
        v = o.jets(self.point, order)
        do = o.jets(self.point, order + 1)
        omega = self.omega_table(v, order)
        phi = [[None] * 4 for _ in range(4)]
        for lam in range(4):
            for mu in range(4):
                acc = omega[lam][mu]
                for kk in range(3):
                    acc = acc + omega[lam][4 + kk] * do[kk].derive(mu)
                    acc = acc + omega[4 + kk][mu] * do[kk].derive(lam)
                phi[lam][mu] = acc
        return phi


def divergence_eta(x_fields: Sequence, bg: Background, point) -> float:
    """div_eta X = (X^0 d0 sqrt|g| + d_i(X^i sqrt|g|)) / sqrt|g|."""
    b = bg.jets(point)
    xj = [f.eval_jet(point, 1) for f in x_fields]
    return divergence_eta_jets(xj, b, 0).value


def divergence_eta_jets(x_jets: Sequence, bundle: BackgroundJets, order: int) -> Jet:
    """Jet version; x_jets must be at order+1."""
    sg = bundle.sqrt_det(order + 1)
    acc = x_jets[0].truncate(order) * sg.derive(0)
    for i in range(3):
        acc = acc + (x_jets[i + 1] * sg).derive(i + 1)
    return acc * sg.truncate(order).recip()


# ---------------------------------------------------------------------------
# scenario helpers


def christoffel_expressions(g_exprs) -> dict:
    """Levi-Civita coefficients of a 3x3 metric expression matrix as ASTs,
    keyed (i, j, k) with i the upper index (1..3) and j <= k; spatial only."""
    g = [[fl.parse(e) if isinstance(e, str) else e for e in row] for row in g_exprs]
    det = fl.sub(
        fl.add(
            fl.mul(g[0][0], fl.sub(fl.mul(g[1][1], g[2][2]), fl.mul(g[1][2], g[2][1]))),
            fl.mul(g[0][2], fl.sub(fl.mul(g[1][0], g[2][1]), fl.mul(g[1][1], g[2][0]))),
        ),
        fl.mul(g[0][1], fl.sub(fl.mul(g[1][0], g[2][2]), fl.mul(g[1][2], g[2][0]))),
    )
    adj = [
        [fl.sub(fl.mul(g[1][1], g[2][2]), fl.mul(g[1][2], g[2][1])),
         fl.sub(fl.mul(g[0][2], g[2][1]), fl.mul(g[0][1], g[2][2])),
         fl.sub(fl.mul(g[0][1], g[1][2]), fl.mul(g[0][2], g[1][1]))],
        [fl.sub(fl.mul(g[1][2], g[2][0]), fl.mul(g[1][0], g[2][2])),
         fl.sub(fl.mul(g[0][0], g[2][2]), fl.mul(g[0][2], g[2][0])),
         fl.sub(fl.mul(g[0][2], g[1][0]), fl.mul(g[0][0], g[1][2]))],
        [fl.sub(fl.mul(g[1][0], g[2][1]), fl.mul(g[1][1], g[2][0])),
         fl.sub(fl.mul(g[0][1], g[2][0]), fl.mul(g[0][0], g[2][1])),
         fl.sub(fl.mul(g[0][0], g[1][1]), fl.mul(g[0][1], g[1][0]))],
    ]
    ginv = [[fl.div(adj[i][j], det) for j in range(3)] for i in range(3)]
    out = {}
    half = fl.Const(0.5)
    for i in range(3):
        for j in range(3):
            for k in range(j, 3):
                acc = fl.Const(0.0)
                for h in range(3):
                    bracket = fl.sub(
                        fl.add(fl.derive_expr(g[h][k], j + 1), fl.derive_expr(g[h][j], k + 1)),
                        fl.derive_expr(g[j][k], h + 1),
                    )
                    acc = fl.add(acc, fl.mul(ginv[i][h], bracket))
                out[(i + 1, j + 1, k + 1)] = fl.mul(half, acc)
    return out
