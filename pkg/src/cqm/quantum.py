"""Grid discretization: pre-quantum operators and Pauli evolution.

Spinor fields live on a rectangular spatial grid with Dirichlet-zero boundary
(the finite surrogate of compactly supported sections).  Axes with a single
node are inactive: the scenario is treated as invariant along them and they
contribute no derivative or potential terms (dimensional reduction).  All
stencils are second-order central differences.

The generator H with i d0 psi = H psi on the Pauli kernel is

    H = -1/2 Delta0 - A0 + i C_0^k xi_k,

and the pre-quantum operator of a special function F is assembled as
i (Y.psi - u0 f0 P psi) with the d0 psi contributions cancelled structurally
(they are never formed).  Crank-Nicolson steps are solved matrix-free by
fixed-point iteration on the Cayley system, guarded by a step-size check.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .background import divergence_eta
from .fieldlang import derive_expr, eval_array
from .hermitian import QuantumData, ch_components
from .pauli import SIGMA, XI, XI_ALL
from .special import SpecialFunction

__all__ = [
    "QuantumData", "ch_components", "divergence_eta", "GridSpec", "SpinorGrid",
    "GridGeometry", "GridOperator", "observed_laplacian", "pauli_generator",
    "prequantum", "operator_bracket", "inner_product", "evolve_pauli",
    "Trajectory", "measure_frequency", "write_snapshot", "read_snapshot",
    "GridMismatch", "NonStaticMetric", "SolverDivergence",
]


class GridMismatch(ValueError):
    """Operands live on different grids."""


class NonStaticMetric(ValueError):
    """Evolution requires a time-independent spatial volume."""


class SolverDivergence(RuntimeError):
    """The Cayley fixed-point iteration failed to converge."""


@dataclass(frozen=True)
class GridSpec:
    """Per-axis (min, max, n) for x1..x3; n = 1 marks an inactive axis."""

    axes: tuple
    time: float = 0.0

    def __post_init__(self):
        if len(self.axes) != 3:
            raise ValueError("three axes required")
        for lo, hi, n in self.axes:
            if n < 1 or (n >= 2 and hi <= lo):
                raise ValueError(f"bad axis ({lo}, {hi}, {n})")

    @property
    def shape(self) -> tuple:
        return tuple(int(n) for _, _, n in self.axes)

    def coords(self) -> list:
        out = []
        for lo, hi, n in self.axes:
            if n == 1:
                out.append(np.array([0.5 * (lo + hi)]))
            else:
                out.append(np.linspace(lo, hi, int(n)))
        return out

    def spacing(self, axis: int) -> float:
        lo, hi, n = self.axes[axis]
        return (hi - lo) / (n - 1) if n > 1 else 0.0

    @property
    def active(self) -> list:
        return [i for i in range(3) if self.axes[i][2] > 1]


@dataclass
class SpinorGrid:
    spec: GridSpec
    psi: np.ndarray  # complex, shape (n1, n2, n3, 2)

    def __post_init__(self):
        self.psi = np.ascontiguousarray(self.psi, dtype=complex)
        if self.psi.shape != self.spec.shape + (2,):
            raise GridMismatch(f"psi shape {self.psi.shape} does not match grid {self.spec.shape}")

    def copy(self) -> "SpinorGrid":
        return SpinorGrid(self.spec, self.psi.copy())


def _check_same(a: SpinorGrid, b: SpinorGrid):
    if a.spec != b.spec:
        raise GridMismatch("grids differ")


def _shift(arr: np.ndarray, axis: int, d: int) -> np.ndarray:
    """Array whose value at node k is arr[k + d] with zeros outside (Dirichlet)."""
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if d == 1:
        dst[axis] = slice(None, -1)
        src[axis] = slice(1, None)
    elif d == -1:
        dst[axis] = slice(1, None)
        src[axis] = slice(None, -1)
    else:
        raise ValueError("shift must be +-1")
    out[tuple(dst)] = arr[tuple(src)]
    return out


def _field_array(fld, coords_mesh) -> np.ndarray:
    if hasattr(fld, "eval_array"):
        return fld.eval_array(coords_mesh)
    shape = coords_mesh[1].shape
    out = np.zeros(shape)
    it = np.nditer(coords_mesh[1], flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        point = [float(coords_mesh[k][idx]) for k in range(4)]
        out[idx] = fld(point)
    return out


class GridGeometry:
    """Node-level coefficient arrays for one (quantum data, grid) pair."""

    def __init__(self, qd: QuantumData, spec: GridSpec):
        self.qd = qd
        self.spec = spec
        xs = spec.coords()
        mesh = np.meshgrid(*xs, indexing="ij")
        self.x0 = np.full(spec.shape, spec.time)
        self.mesh4 = [self.x0] + list(mesh)
        bg = qd.bg
        consts = bg.constants
        self.u0 = consts.u0.value
        self.kinetic = consts.u0.value * consts.hbar.value / consts.m.value  # u0 hbar / m
        g = np.stack(
            [np.stack([_field_array(bg.g[i][j], self.mesh4) for j in range(3)]) for i in range(3)]
        )  # (3,3,nodes)
        g = np.moveaxis(g, (0, 1), (-2, -1))
        self.det = np.linalg.det(g)
        if np.any(self.det <= 0):
            raise ValueError("metric not positive definite on the grid")
        self.sqrtg = np.sqrt(self.det)
        self.ginv = np.linalg.inv(g)
        self.g = g
        # d0 sqrt|g| through d0 det = det tr(g^-1 d0 g)
        d0g = np.zeros_like(g)
        for i in range(3):
            for j in range(3):
                if hasattr(bg.g[i][j], "expr"):
                    d0g[..., i, j] = eval_array(derive_expr(bg.g[i][j].expr, 0), self.mesh4, bg.g[i][j].consts)
        self.d0sqrtg = 0.5 * self.sqrtg * np.einsum("...ij,...ji->...", self.ginv, d0g)
        self.a = [_field_array(f, self.mesh4) for f in qd.a_fields]
        self.da = np.zeros(spec.shape + (3, 3))
        for i in range(3):
            for j in range(3):
                self.da[..., i, j] = _field_array(qd.a_fields[j + 1].derivative(i + 1), self.mesh4)
        # spatial connection coefficients K^h_{ij} (grav = charge-joined spatial part)
        self.gamma = np.zeros(spec.shape + (3, 3, 3))  # [h, i, j]
        for (h, lam, mu), fld in bg.kgrav.items():
            if lam >= 1 and mu >= 1:
                arr = _field_array(fld, self.mesh4)
                self.gamma[..., h - 1, lam - 1, mu - 1] = arr
                if lam != mu:
                    self.gamma[..., h - 1, mu - 1, lam - 1] = arr
        self.c_coeffs = self._spin_coeff_arrays()
        self.dsqrtg = np.zeros(spec.shape + (3,))
        self.dginv = np.zeros(spec.shape + (3, 3, 3))  # [axis, j, h] = d_axis g^{jh}
        for ax in spec.active:
            dgi = np.zeros_like(g)
            for i in range(3):
                for j in range(3):
                    if hasattr(bg.g[i][j], "expr"):
                        dgi[..., i, j] = eval_array(
                            derive_expr(bg.g[i][j].expr, ax + 1), self.mesh4, bg.g[i][j].consts
                        )
            self.dsqrtg[..., ax] = 0.5 * self.sqrtg * np.einsum("...ij,...ji->...", self.ginv, dgi)
            self.dginv[..., ax, :, :] = -np.einsum("...ij,...jk,...kl->...il", self.ginv, dgi, self.ginv)
        self.dvol = 1.0
        for ax in spec.active:
            self.dvol *= self.spec.spacing(ax)

    def _spin_coeff_arrays(self) -> np.ndarray:
        out = np.zeros(self.spec.shape + (4, 3))
        if self.qd.bg.fields_constant:
            xs = [float(np.mean(self.mesh4[k])) for k in range(4)]
            vals = self.qd.spin.coeff_values(xs)
            out[...] = vals
            return out
        it = np.nditer(self.mesh4[1], flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            point = [float(self.mesh4[k][idx]) for k in range(4)]
            out[idx] = self.qd.spin.coeff_values(point)
        return out

    # -- differential helpers ------------------------------------------------

    def d1(self, arr: np.ndarray, axis: int) -> np.ndarray:
        h = self.spec.spacing(axis)
        return (_shift(arr, axis, 1) - _shift(arr, axis, -1)) / (2.0 * h)

    def d2(self, arr: np.ndarray, axis: int) -> np.ndarray:
        h = self.spec.spacing(axis)
        return (_shift(arr, axis, 1) - 2.0 * arr + _shift(arr, axis, -1)) / (h * h)

    def d_cross(self, arr: np.ndarray, ax1: int, ax2: int) -> np.ndarray:
        h1, h2 = self.spec.spacing(ax1), self.spec.spacing(ax2)
        pp = _shift(_shift(arr, ax1, 1), ax2, 1)
        pm = _shift(_shift(arr, ax1, 1), ax2, -1)
        mp = _shift(_shift(arr, ax1, -1), ax2, 1)
        mm = _shift(_shift(arr, ax1, -1), ax2, -1)
        return (pp - pm - mp + mm) / (4.0 * h1 * h2)


@dataclass
class GridOperator:
    """A linear map on spinor grids."""

    label: str
    apply_fn: Callable
    symmetric: bool = False

    def __call__(self, grid: SpinorGrid) -> SpinorGrid:
        return SpinorGrid(grid.spec, self.apply_fn(grid.psi))


def inner_product(geom: GridGeometry, a: SpinorGrid, b: SpinorGrid) -> complex:
    """<a, b> = sum conj(a) . b sqrt|g| dV (plain Riemann sum)."""
    _check_same(a, b)
    dens = np.einsum("...s,...s->...", a.psi.conj(), b.psi)
    return complex(np.sum(dens * geom.sqrtg) * geom.dvol)


def grid_norm(geom: GridGeometry, a: SpinorGrid) -> float:
    return float(np.sqrt(inner_product(geom, a, a).real))


def observed_laplacian(geom: GridGeometry) -> GridOperator:
    """Delta0[o] = u0 (hbar/m) g^{ij} ((d_i - iA_i)(d_j - iA_j) - K^h_{ij}(d_h - iA_h)).

    The connection term carries the covariant-Hessian sign (-Gamma); it is
    assembled through the divergence identity -g^{ij} K^h_{ij} =
    (1/sqrt|g|) d_i (sqrt|g| g^{ih}), which makes this the Laplace-Beltrami
    operator of the spatial metric (symmetric with the sqrt|g| weight).  Sums
    run over active axes only: a single-node axis removes its whole
    (d_i - iA_i) factor, and the divergence form keeps the reduction
    self-adjoint for the full 3-d volume weight."""
    active = geom.spec.active
    ginv = geom.ginv
    a_sp = [geom.a[i + 1] for i in range(3)]
    da_term = np.zeros(geom.spec.shape)
    aa_term = np.zeros(geom.spec.shape)
    w = np.zeros(geom.spec.shape + (3,))
    for i in active:
        for j in active:
            da_term += ginv[..., i, j] * geom.da[..., i, j]
            aa_term += ginv[..., i, j] * a_sp[i] * a_sp[j]
        for h in active:
            w[..., h] += geom.dginv[..., i, i, h] + ginv[..., i, h] * geom.dsqrtg[..., i] / geom.sqrtg

    def apply_fn(psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        grads = {}
        for i in active:
            grads[i] = geom.d1(psi, i)
        for i in active:
            out += ginv[..., i, i, None] * geom.d2(psi, i)
            for j in active:
                if j != i:
                    out += ginv[..., i, j, None] * geom.d_cross(psi, i, j)
        for i in active:
            coef = np.zeros(psi.shape[:-1])
            for j in active:
                coef += 2.0 * ginv[..., i, j] * a_sp[j]
            out += -1j * coef[..., None] * grads[i]
        out += (-1j * da_term - aa_term)[..., None] * psi
        for h in active:
            out += w[..., h, None] * (grads[h] - 1j * a_sp[h][..., None] * psi)
        return geom.kinetic * out

    return GridOperator("Delta0", apply_fn, symmetric=False)


def _static_check(geom: GridGeometry, tol: float = 1e-12):
    if float(np.max(np.abs(geom.d0sqrtg))) > tol:
        raise NonStaticMetric("metric volume is time-dependent; evolution unsupported")


def _spin_matrix(coeff: np.ndarray) -> np.ndarray:
    """i C^a xi_a as a (..., 2, 2) array for real coefficient arrays (..., 3)."""
    out = np.zeros(coeff.shape[:-1] + (2, 2), dtype=complex)
    for a in range(3):
        out += coeff[..., a, None, None] * (1j * XI[a])
    return out


def pauli_generator(geom: GridGeometry) -> GridOperator:
    """H with i d0 psi = H psi on the Pauli kernel: -1/2 Delta0 - A0 + i C_0^k xi_k."""
    _static_check(geom)
    lap = observed_laplacian(geom)
    hmat = _spin_matrix(geom.c_coeffs[..., 0, :])
    a0 = geom.a[0]

    def apply_fn(psi: np.ndarray) -> np.ndarray:
        out = -0.5 * lap.apply_fn(psi)
        out -= a0[..., None] * psi
        out += np.einsum("...ab,...b->...a", hmat, psi)
        return out

    return GridOperator("pauli_generator", apply_fn, symmetric=True)


def _component_array(fld, geom: GridGeometry) -> np.ndarray:
    return _field_array(fld, geom.mesh4)


def _jet_derivative_array(fld, geom: GridGeometry, var: int) -> np.ndarray:
    out = np.zeros(geom.spec.shape)
    it = np.nditer(geom.mesh4[1], flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        point = [float(geom.mesh4[k][idx]) for k in range(4)]
        out[idx] = fld.eval_jet(point, 1).derive(var).value
    return out


def prequantum(qd: QuantumData, geom: GridGeometry, f: SpecialFunction) -> GridOperator:
    """i (Y[F].psi - u0 f0 P psi) with the time derivative structurally
    cancelled (no d0 psi term is ever formed)."""
    if qd is not geom.qd:
        raise GridMismatch("geometry was built for different quantum data")
    f0 = _component_array(f.f0, geom)
    fi = [_component_array(c, geom) for c in f.fi]
    fbrev = _component_array(f.fbrev, geom)
    phi = [_component_array(c, geom) for c in f.phi]
    xi_sp = [-fi[i] for i in range(3)]
    y0 = f0 * geom.a[0] + fbrev
    for j in range(3):
        y0 = y0 - fi[j] * geom.a[j + 1]
    ya = []
    for a in range(3):
        acc = phi[a] + f0 * geom.c_coeffs[..., 0, a]
        for j in range(3):
            acc = acc - fi[j] * geom.c_coeffs[..., j + 1, a]
        ya.append(acc)
    # div_eta X = (X^0 d0 sqrtg + d_i(X^i sqrtg)) / sqrtg, active axes only
    div = f0 * geom.d0sqrtg / geom.sqrtg
    for i in geom.spec.active:
        if hasattr(f.fi[i], "derivative"):
            dxi = _component_array(f.fi[i].derivative(i + 1), geom)
        else:
            dxi = _jet_derivative_array(f.fi[i], geom, i + 1)
        div += -dxi + xi_sp[i] * geom.dsqrtg[..., i] / geom.sqrtg
    ymat = np.zeros(geom.spec.shape + (2, 2), dtype=complex)
    for nu in range(4):
        coeff = y0 if nu == 0 else ya[nu - 1]
        ymat += coeff[..., None, None] * XI_ALL[nu]
    ymat += (-0.5 * div)[..., None, None] * np.eye(2)
    lap = observed_laplacian(geom)
    c0mat = np.zeros(geom.spec.shape + (2, 2), dtype=complex)
    for a in range(3):
        c0mat += geom.c_coeffs[..., 0, a, None, None] * XI[a]
    a0 = geom.a[0]
    active = geom.spec.active
    p_factor = geom.d0sqrtg / (2.0 * geom.sqrtg)

    def apply_fn(psi: np.ndarray) -> np.ndarray:
        ypsi = -np.einsum("...ab,...b->...a", ymat, psi)
        for i in active:
            ypsi += xi_sp[i][..., None] * geom.d1(psi, i)
        ppsi = (-1j * a0 + p_factor)[..., None] * psi
        ppsi += -0.5j * lap.apply_fn(psi)
        ppsi -= np.einsum("...ab,...b->...a", c0mat, psi)
        return 1j * (ypsi - f0[..., None] * ppsi)

    label = f.name or "prequantum"
    return GridOperator(label, apply_fn, symmetric=True)


def operator_bracket(o1: GridOperator, o2: GridOperator, probe: SpinorGrid) -> SpinorGrid:
    """[O1, O2] psi = -i (O1 O2 - O2 O1) psi."""
    a = o1.apply_fn(o2.apply_fn(probe.psi))
    b = o2.apply_fn(o1.apply_fn(probe.psi))
    return SpinorGrid(probe.spec, -1j * (a - b))


def check_linearity(op: GridOperator, spec: GridSpec, rng: np.random.Generator) -> float:
    shape = spec.shape + (2,)
    u = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    al, be = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = op.apply_fn(al * u + be * v)
    rhs = al * op.apply_fn(u) + be * op.apply_fn(v)
    scale = max(1.0, float(np.max(np.abs(lhs))))
    return float(np.max(np.abs(lhs - rhs))) / scale


# ---------------------------------------------------------------------------
# evolution


@dataclass
class Trajectory:
    steps: np.ndarray
    times: np.ndarray
    norms: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    widths: np.ndarray
    final: SpinorGrid
    snapshots: list = field(default_factory=list)


def _spin_expectations(geom: GridGeometry, grid: SpinorGrid):
    nn = inner_product(geom, grid, grid).real
    if nn == 0.0:
        return 0.0, [0.0, 0.0, 0.0]
    out = []
    for s in SIGMA:
        spsi = np.einsum("ab,...b->...a", s, grid.psi)
        out.append(float(np.sum(np.einsum("...s,...s->...", grid.psi.conj(), spsi) * geom.sqrtg).real * geom.dvol / nn))
    return nn, out


def _width(geom: GridGeometry, grid: SpinorGrid) -> float:
    dens = np.einsum("...s,...s->...", grid.psi.conj(), grid.psi).real * geom.sqrtg
    total = float(np.sum(dens))
    if total == 0.0:
        return 0.0
    var = 0.0
    for ax in geom.spec.active:
        x = geom.mesh4[ax + 1]
        mean = float(np.sum(dens * x)) / total
        var += float(np.sum(dens * (x - mean) ** 2)) / total
    return float(np.sqrt(var))


def _estimate_norm(op: GridOperator, spec: GridSpec, iters: int = 12) -> float:
    rng = np.random.default_rng(20240901)
    v = rng.standard_normal(spec.shape + (2,)) + 1j * rng.standard_normal(spec.shape + (2,))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = op.apply_fn(v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return lam


def evolve_pauli(
    qd: QuantumData,
    psi0: SpinorGrid,
    dt: float,
    steps: int,
    geom: GridGeometry | None = None,
    snapshot_every: int = 0,
) -> Trajectory:
    """Crank-Nicolson evolution (1 + i dt/2 H) psi+ = (1 - i dt/2 H) psi,
    solved matrix-free by fixed-point iteration to near machine tolerance."""
    geom = geom or GridGeometry(qd, psi0.spec)
    h_op = pauli_generator(geom)
    hnorm = _estimate_norm(h_op, psi0.spec)
    if dt * hnorm > 1.5:
        raise SolverDivergence(
            f"step-size guard: dt*|H| ~ {dt * hnorm:.2f} > 1.5; reduce dt for the fixed-point solver"
        )
    grid = psi0.copy()
    rows = {k: [] for k in ("step", "time", "norm", "sx", "sy", "sz", "width")}
    snaps = []

    def record(step):
        nn, (sx, sy, sz) = _spin_expectations(geom, grid)
        rows["step"].append(step)
        rows["time"].append(psi0.spec.time + step * dt)
        rows["norm"].append(float(np.sqrt(nn)))
        rows["sx"].append(sx)
        rows["sy"].append(sy)
        rows["sz"].append(sz)
        rows["width"].append(_width(geom, grid))
        if snapshot_every and step % snapshot_every == 0:
            snaps.append((step, grid.copy()))

    record(0)
    half = 0.5j * dt
    for n in range(1, steps + 1):
        hpsi = h_op.apply_fn(grid.psi)
        b = grid.psi - half * hpsi
        x = b.copy()
        bnorm = float(np.linalg.norm(b)) or 1.0
        converged = False
        for _ in range(500):
            x_new = b - half * h_op.apply_fn(x)
            delta = float(np.linalg.norm(x_new - x))
            x = x_new
            if delta <= 1e-14 * bnorm:
                converged = True
                break
        if not converged:
            raise SolverDivergence(f"fixed-point iteration stalled at step {n}")
        grid = SpinorGrid(grid.spec, x)
        record(n)
    return Trajectory(
        steps=np.array(rows["step"]),
        times=np.array(rows["time"]),
        norms=np.array(rows["norm"]),
        sx=np.array(rows["sx"]),
        sy=np.array(rows["sy"]),
        sz=np.array(rows["sz"]),
        widths=np.array(rows["width"]),
        final=grid,
        snapshots=snaps,
    )


def measure_frequency(signal: np.ndarray, dt: float) -> float:
    """Dominant angular frequency of a real signal: Hann-windowed periodogram
    peak refined by golden-section search."""
    sig = np.asarray(signal, dtype=float)
    sig = sig - np.mean(sig)
    n = len(sig)
    window = np.hanning(n)
    t = np.arange(n) * dt

    def power(omega: float) -> float:
        z = np.sum(window * sig * np.exp(-1j * omega * t))
        return float(np.abs(z) ** 2)

    pad = 8
    spec = np.abs(np.fft.rfft(window * sig, n=pad * n)) ** 2
    freqs = 2.0 * np.pi * np.fft.rfftfreq(pad * n, d=dt)
    k = int(np.argmax(spec[1:]) + 1)
    lo = freqs[max(k - 2, 0)]
    hi = freqs[min(k + 2, len(freqs) - 1)]
    phi_ratio = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi_ratio * (b - a)
    d = a + phi_ratio * (b - a)
    for _ in range(80):
        if power(c) > power(d):
            b = d
        else:
            a = c
        c = b - phi_ratio * (b - a)
        d = a + phi_ratio * (b - a)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# snapshot files: header (3 int64 sizes, 6 f64 box bounds, 1 f64 time),
# then row-major (re, im) f64 pairs, little-endian, spinor index fastest.

_HEADER = struct.Struct("<3q6dd")


def write_snapshot(path, grid: SpinorGrid):
    spec = grid.spec
    bounds = []
    for lo, hi, _ in spec.axes:
        bounds += [lo, hi]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*spec.shape, *bounds, spec.time))
        data = np.empty(spec.shape + (2, 2))
        data[..., 0] = grid.psi.real
        data[..., 1] = grid.psi.imag
        fh.write(data.astype("<f8").tobytes())


def read_snapshot(path) -> SpinorGrid:
    with open(path, "rb") as fh:
        header = _HEADER.unpack(fh.read(_HEADER.size))
        n1, n2, n3 = header[0:3]
        bounds = header[3:9]
        time = header[9]
        axes = tuple((bounds[2 * i], bounds[2 * i + 1], (n1, n2, n3)[i]) for i in range(3))
        raw = np.frombuffer(fh.read(), dtype="<f8").reshape((n1, n2, n3, 2, 2))
        psi = (raw[..., 0] + 1j * raw[..., 1]).copy()
    return SpinorGrid(GridSpec(axes, time), psi)
