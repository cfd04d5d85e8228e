"""Special phase functions and their Lie brackets.

A special function is the tuple (f0, f^i, fbrev, phi_a): quadratic velocity
weight, momentum components (chart), observer-adapted scalar part, and the
spin covector in orthonormal-frame components.  Evaluation on the extended
phase space is

    f0 (m u^0 / 2 hbar) g_ij v^i v^j + f^i (m u^0 / hbar) g_ij v^j + fbrev
    + phi_a s^a.

Brackets are computed from the adapted-coordinate component formulas; direct
bracket evaluation therefore requires the reference observer.  The spin part
uses the moment-joined restricted connection (frame coefficients Ktilde and
the curvature axial covector rho), the scalar part the charge-joined
cosymplectic pullback Phi.  Nested brackets are evaluated with jet-valued
components so outer derivatives are exact; this is what caps the jet order
at 3 (rho carries two metric derivatives, one more for the outer bracket).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import Background, BackgroundJets, Observer, PhasePoint, as_point
from .jets import Jet
from .pauli import EPS


class NonAdaptedObserver(ValueError):
    """Direct bracket evaluation requires the chart-adapted (reference)
    observer; other observers go through the invariant-combination route."""


@dataclass(frozen=True)
class SpecialFunction:
    f0: object
    fi: tuple
    fbrev: object
    phi: tuple
    name: str = ""

    @classmethod
    def scalar(cls, f0, fi, fbrev, name: str = "") -> "SpecialFunction":
        from .fieldlang import zero_field

        return cls(f0, tuple(fi), fbrev, tuple(zero_field() for _ in range(3)), name)


@dataclass(frozen=True)
class SpecialValue:
    """Componentwise value of a special function (or of a bracket) at a point."""

    f0: float
    fi: np.ndarray
    fbrev: float
    phi: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.f0], self.fi, [self.fbrev], self.phi))


@dataclass
class ComponentJets:
    f0: Jet
    fi: list
    fbrev: Jet
    phi: list
    order: int

    def truncate(self, order: int) -> "ComponentJets":
        return ComponentJets(
            self.f0.truncate(order),
            [j.truncate(order) for j in self.fi],
            self.fbrev.truncate(order),
            [j.truncate(order) for j in self.phi],
            order,
        )

    def values(self) -> SpecialValue:
        return SpecialValue(
            self.f0.value,
            np.array([j.value for j in self.fi]),
            self.fbrev.value,
            np.array([j.value for j in self.phi]),
        )

    def x_components(self) -> list:
        """Chart components of X[f]: (f0, -f^i)."""
        return [self.f0, -self.fi[0], -self.fi[1], -self.fi[2]]


def component_jets(f: SpecialFunction, point, order: int) -> ComponentJets:
    point = as_point(point)
    return ComponentJets(
        f.f0.eval_jet(point, order),
        [c.eval_jet(point, order) for c in f.fi],
        f.fbrev.eval_jet(point, order),
        [c.eval_jet(point, order) for c in f.phi],
        order,
    )


def eval_special(f: SpecialFunction, bg: Background, p: PhasePoint) -> float:
    b = bg.jets(p.x)
    g = [[b.metric(0)[i][j].value for j in range(3)] for i in range(3)]
    pref = bg.constants.metric_prefactor
    quad = float(p.v @ np.array(g) @ p.v)
    lin = float(np.array([c(p.x) for c in f.fi]) @ np.array(g) @ p.v)
    spin = float(np.array([c(p.x) for c in f.phi]) @ p.s)
    return f.f0(p.x) * 0.5 * pref * quad + pref * lin + f.fbrev(p.x) + spin


def vector_of(f: SpecialFunction, point) -> np.ndarray:
    """Chart components of X[f] = f0 d0 - f^i d_i."""
    point = as_point(point)
    return np.array([f.f0(point), -f.fi[0](point), -f.fi[1](point), -f.fi[2](point)])


# ---------------------------------------------------------------------------
# bracket engines (jet-generic so brackets nest exactly)


def scalar_bracket_jets(a: ComponentJets, b: ComponentJets, bundle: BackgroundJets, order: int):
    """(f0'', fi'', fbrev'') jets at `order`; inputs must be at order+1."""
    phi2 = bundle.phi_ref(order)

    def lam_component(fa: Jet, fb: Jet) -> Jet:
        out = (
            a.f0.truncate(order) * fb.derive(0)
            - b.f0.truncate(order) * fa.derive(0)
        )
        for h in range(3):
            out = out - a.fi[h].truncate(order) * fb.derive(h + 1)
            out = out + b.fi[h].truncate(order) * fa.derive(h + 1)
        return out

    f0_out = lam_component(a.f0, b.f0)
    fi_out = [lam_component(a.fi[i], b.fi[i]) for i in range(3)]
    fb_out = lam_component(a.fbrev, b.fbrev)
    a0 = a.f0.truncate(order)
    b0 = b.f0.truncate(order)
    for h in range(3):
        ah = a.fi[h].truncate(order)
        bh = b.fi[h].truncate(order)
        fb_out = fb_out - (a0 * bh - b0 * ah) * phi2[0][h + 1]
        for k in range(3):
            fb_out = fb_out + ah * b.fi[k].truncate(order) * phi2[h + 1][k + 1]
    return f0_out, fi_out, fb_out


def extended_bracket_jets(a: ComponentJets, b: ComponentJets, bundle: BackgroundJets, order: int) -> ComponentJets:
    """Full bracket at `order`; inputs at order+1."""
    f0_out, fi_out, fb_out = scalar_bracket_jets(a, b, bundle, order)
    kt = bundle.ktilde("moment", order)
    rho = bundle.rho("moment", order)
    xa = [j.truncate(order) for j in a.x_components()]
    xb = [j.truncate(order) for j in b.x_components()]

    def covariant(phi_jets, lam):
        # covector transport d_lam phi_k - Ktilde_lam^k_j phi_j; this is the
        # rule the endomorphism picture induces (nabla = d - ad of the
        # connection matrix), and what makes the field correspondence exact.
        out = []
        for k in range(3):
            acc = phi_jets[k].derive(lam)
            for j in range(3):
                acc = acc - kt[lam][k][j] * phi_jets[j].truncate(order)
            out.append(acc)
        return out

    phi_out = []
    for k in range(3):
        acc = None
        for lam in range(4):
            for mu in range(4):
                term = rho[lam][mu][k] * xa[lam] * xb[mu] * (-1.0)
                acc = term if acc is None else acc + term
        phi_out.append(acc)
    for lam in range(4):
        dphi_b = covariant(b.phi, lam)
        dphi_a = covariant(a.phi, lam)
        for k in range(3):
            phi_out[k] = phi_out[k] + xa[lam] * dphi_b[k] - xb[lam] * dphi_a[k]
    # phi' x phi
    for k in range(3):
        for i in range(3):
            for j in range(3):
                if EPS[k, i, j] != 0.0:
                    phi_out[k] = phi_out[k] + b.phi[i].truncate(order) * a.phi[j].truncate(order) * EPS[k, i, j]
    return ComponentJets(f0_out, fi_out, fb_out, phi_out, order)


# ---------------------------------------------------------------------------
# public operations


def _require_reference(o: Observer):
    if not o.is_reference:
        raise NonAdaptedObserver("bracket formulas are stated in reference-adapted coordinates")


def scalar_bracket(f: SpecialFunction, fp: SpecialFunction, bg: Background, o: Observer, point) -> SpecialValue:
    _require_reference(o)
    b = bg.jets(point)
    a = component_jets(f, point, 1)
    c = component_jets(fp, point, 1)
    f0, fi, fb = scalar_bracket_jets(a, c, b, 0)
    return SpecialValue(f0.value, np.array([j.value for j in fi]), fb.value, np.zeros(3))


def extended_bracket(f: SpecialFunction, fp: SpecialFunction, bg: Background, point) -> SpecialValue:
    b = bg.jets(point)
    a = component_jets(f, point, 1)
    c = component_jets(fp, point, 1)
    return extended_bracket_jets(a, c, b, 0).values()


def jacobi_residual(f1: SpecialFunction, f2: SpecialFunction, f3: SpecialFunction, bg: Background, point) -> float:
    """Max-norm of the cyclic sum [[F1,[F2,F3]]] + cyc at the point."""
    b = bg.jets(point)
    comps = [component_jets(f, point, 2) for f in (f1, f2, f3)]
    total = np.zeros(8)
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        inner = extended_bracket_jets(comps[j], comps[k], b, 1)
        outer = extended_bracket_jets(comps[i].truncate(1), inner, b, 0)
        total += outer.values().as_array()
    return float(np.max(np.abs(total)))
