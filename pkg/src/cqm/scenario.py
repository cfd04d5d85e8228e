"""Scenario files: JSON descriptions of a background, observers, potential,
special-function table, grid and verification-suite parameters.

Schema (all field values are expression strings in the field language):

    {
      "constants": {"m": 1.0, "q": 1.0, "hbar": 1.0, "mu": 1.0, "u0": 1.0,
                    "b": {"value": 0.4, "dim": {"l": "1/2", "t": "0", "m": "1/2"}}},
      "gauge":     {"length": 1.0, "time": 1.0, "mass": 1.0},
      "metric":    [["1","0","0"],["0","1","0"],["0","0","1"]],
      "Kgrav":     "auto" | {"1_11": "...", ...},        # keys i_lm, upper index first
      "F":         {"12": "b", ...},                      # keys lm with l < m
      "observers": {"name": ["o1","o2","o3"], ...},
      "A":         ["A0","A1","A2","A3"],
      "functions": {"name": {"f0": "...", "fi": [...], "fbrev": "...", "phi": [...]}
                    | {"builtin": "spin_n", "n": ["...","...","..."]}},
      "grid":      {"axes": [[lo,hi,n],[lo,hi,n],[lo,hi,n]], "time": 0.0,
                    "psi0": [["re","im"],["re","im"]], "normalize": true},
      "suite":     {"samples": 100, "seed": 1234, "box": [[lo,hi] x4],
                    "tolerances": {...}},
      "flags":     {"uniform_B": true}
    }

Missing metric defaults to the identity, missing connection/F entries to "0".
The builtins x0..x3, P1..P3, H0 and H0prime are always registered; H0prime
includes the spin term phi = -u0 mu B_flat, and spin_n(n) is the spin
observable along the unit covector n (phi = -n), so its pre-quantum operator
is (1/2) n^i sigma_i.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import fieldlang as fl
from .background import Background, Constants, Observer, christoffel_expressions
from .fieldlang import DerivedField, FieldDef
from .hermitian import QuantumData, SpinorSection
from .quantum import GridSpec, SpinorGrid
from .special import SpecialFunction
from .units import (
    CHARGE_DIM,
    DIMLESS,
    EM_FIELD_DIM,
    HBAR_DIM,
    MASS,
    METRIC_DIM,
    MOMENT_DIM,
    TIME,
    Dim,
    Gauge,
    ScaledReal,
)

_CANONICAL_DIMS = {"m": MASS, "q": CHARGE_DIM, "hbar": HBAR_DIM, "mu": MOMENT_DIM, "u0": TIME}


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    background: Background
    observers: dict
    qd: QuantumData
    functions: dict
    grid: GridSpec | None
    psi0: SpinorSection | None
    normalize: bool
    samples: int
    seed: int
    box: np.ndarray
    tolerances: dict
    flags: dict
    a_exprs: tuple

    def observer(self, name: str) -> Observer:
        try:
            return self.observers[name]
        except KeyError:
            raise ScenarioError(f"unknown observer {name!r}") from None

    def function(self, name: str) -> SpecialFunction:
        try:
            return self.functions[name]
        except KeyError:
            raise ScenarioError(f"unknown special function {name!r}") from None

    def sample_points(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        n = n if n is not None else self.samples
        lo, hi = self.box[:, 0], self.box[:, 1]
        return lo + (hi - lo) * rng.random((n, 4))

    def initial_grid(self) -> SpinorGrid:
        if self.grid is None or self.psi0 is None:
            raise ScenarioError("scenario has no grid/psi0 section")
        xs = self.grid.coords()
        mesh = np.meshgrid(*xs, indexing="ij")
        coords = [np.full(self.grid.shape, self.grid.time)] + list(mesh)
        psi = np.zeros(self.grid.shape + (2,), dtype=complex)
        for comp in range(2):
            re_f, im_f = self.psi0.components[comp]
            psi[..., comp] = re_f.eval_array(coords) + 1j * im_f.eval_array(coords)
        grid = SpinorGrid(self.grid, psi)
        if self.normalize:
            from .quantum import GridGeometry, grid_norm

            geom = GridGeometry(self.qd, self.grid)
            nrm = grid_norm(geom, grid)
            if nrm == 0.0:
                raise ScenarioError("psi0 is identically zero")
            grid.psi /= nrm
        return grid


def _parse_constants(obj: Mapping) -> Constants:
    table = {}
    extras = {}
    for name, dim in _CANONICAL_DIMS.items():
        raw = obj.get(name, 1.0)
        if isinstance(raw, Mapping):
            raw = raw.get("value", 1.0)
        table[name] = ScaledReal(float(raw), dim)
    for name, raw in obj.items():
        if name in _CANONICAL_DIMS:
            continue
        if isinstance(raw, Mapping):
            dim = Dim.from_json(raw.get("dim", {"l": "0", "t": "0", "m": "0"}))
            extras[name] = ScaledReal(float(raw["value"]), dim)
        else:
            extras[name] = ScaledReal(float(raw), DIMLESS)
    return Constants(extras=extras, **table)


def _fdef(name: str, dim: Dim, source: str, consts, where: str) -> FieldDef:
    try:
        return FieldDef(name, dim, source, consts)
    except Exception as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _parse_metric(obj, consts) -> list:
    if obj is None:
        obj = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]
    rows = []
    for i in range(3):
        row = []
        for j in range(3):
            row.append(_fdef(f"g{i + 1}{j + 1}", METRIC_DIM, str(obj[i][j]), consts, f"metric[{i}][{j}]"))
        rows.append(row)
    for i in range(3):
        for j in range(i + 1, 3):
            if rows[i][j].expr != rows[j][i].expr:
                raise ScenarioError(f"metric is not symmetric at ({i},{j})")
    return rows


def _parse_kgrav(obj, metric_obj, consts) -> dict:
    out = {}
    auto = False
    entries = {}
    if obj is None:
        pass
    elif isinstance(obj, str):
        if obj != "auto":
            raise ScenarioError(f"Kgrav must be a mapping or 'auto', got {obj!r}")
        auto = True
    else:
        entries = dict(obj)
        auto = bool(entries.pop("auto", False))
    if auto:
        g_exprs = metric_obj if metric_obj is not None else [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]
        for (i, j, k), expr in christoffel_expressions([[str(e) for e in row] for row in g_exprs]).items():
            out[(i, j, k)] = FieldDef(f"K{i}_{j}{k}", DIMLESS, expr, consts)
    for key, source in entries.items():
        try:
            i_str, lm = key.split("_")
            i = int(i_str)
            lam, mu = int(lm[0]), int(lm[1])
            assert 1 <= i <= 3 and 0 <= lam <= 3 and 0 <= mu <= 3
        except Exception:
            raise ScenarioError(f"bad Kgrav key {key!r} (expected e.g. '1_02')") from None
        out[(i, min(lam, mu), max(lam, mu))] = _fdef(f"K{key}", DIMLESS, str(source), consts, f"Kgrav[{key}]")
    return out


def _parse_f(obj, consts) -> dict:
    out = {}
    for key, source in (obj or {}).items():
        try:
            lam, mu = int(key[0]), int(key[1])
            assert 0 <= lam < mu <= 3
        except Exception:
            raise ScenarioError(f"bad F key {key!r} (expected e.g. '12' with l < m)") from None
        out[(lam, mu)] = _fdef(f"F{key}", EM_FIELD_DIM, str(source), consts, f"F[{key}]")
    return out


def _builtin_functions(bg: Background, a_exprs, consts) -> dict:
    zero = fl.zero_field()
    one = FieldDef("1", DIMLESS, "1", consts)
    funcs = {}
    for lam, sym in enumerate(("x0", "x1", "x2", "x3")):
        funcs[sym] = SpecialFunction.scalar(zero, (zero, zero, zero), FieldDef(sym, DIMLESS, sym, consts), name=sym)
    for i in range(3):
        fi = tuple(one if j == i else zero for j in range(3))
        fbrev = FieldDef(f"A{i + 1}", DIMLESS, a_exprs[i + 1], consts)
        funcs[f"P{i + 1}"] = SpecialFunction.scalar(zero, fi, fbrev, name=f"P{i + 1}")
    neg_a0 = FieldDef("-A0", DIMLESS, fl.sub(fl.Const(0.0), fl.parse(a_exprs[0])), consts)
    funcs["H0"] = SpecialFunction.scalar(one, (zero, zero, zero), neg_a0, name="H0")
    c = bg.constants
    w = -c.u0.value * c.mu.value
    if bg.fields_constant:
        b_vals = [sr.value for sr in bg.magnetic_field((0.0, 0.0, 0.0, 0.0))]
        phi = tuple(FieldDef(f"phiB{a}", DIMLESS, fl.Const(w * b_vals[a]), consts) for a in range(3))
    else:
        def make(a):
            return DerivedField(
                f"phiB{a}", DIMLESS, lambda point, order, a=a: bg.jets(point).magnetic(order)[a] * w
            )

        phi = tuple(make(a) for a in range(3))
    funcs["H0prime"] = SpecialFunction(one, (zero, zero, zero), neg_a0, phi, name="H0prime")
    return funcs


def _parse_function(name: str, obj: Mapping, consts) -> SpecialFunction:
    zero = fl.zero_field()
    if "builtin" in obj:
        kind = obj["builtin"]
        if kind != "spin_n":
            raise ScenarioError(f"functions[{name}]: unknown builtin {kind!r}")
        n_exprs = obj.get("n")
        if not n_exprs or len(n_exprs) != 3:
            raise ScenarioError(f"functions[{name}]: spin_n needs a 3-entry 'n'")
        phi = tuple(
            _fdef(f"{name}.phi{a}", DIMLESS, f"-({n_exprs[a]})", consts, f"functions[{name}]")
            for a in range(3)
        )
        return SpecialFunction(zero, (zero, zero, zero), zero, phi, name=name)
    def get(field_name, default="0"):
        return str(obj.get(field_name, default))

    fi = obj.get("fi", ["0", "0", "0"])
    phi = obj.get("phi", ["0", "0", "0"])
    return SpecialFunction(
        _fdef(f"{name}.f0", DIMLESS, get("f0"), consts, f"functions[{name}].f0"),
        tuple(_fdef(f"{name}.f{i + 1}", DIMLESS, str(fi[i]), consts, f"functions[{name}].fi") for i in range(3)),
        _fdef(f"{name}.fbrev", DIMLESS, get("fbrev"), consts, f"functions[{name}].fbrev"),
        tuple(_fdef(f"{name}.phi{a}", DIMLESS, str(phi[a]), consts, f"functions[{name}].phi") for a in range(3)),
        name=name,
    )


def load_scenario(source) -> Scenario:
    """Load a scenario from a path, JSON string, or parsed mapping."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        path = Path(source)
        if not path.exists():
            raise ScenarioError(f"scenario file not found: {source}")
        text = path.read_text()
    elif isinstance(source, str):
        text = source
    else:
        text = None
    if text is not None:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid scenario JSON: {exc}") from exc
    else:
        data = source
    constants = _parse_constants(data.get("constants", {}))
    consts = constants.table()
    gauge_obj = data.get("gauge", {})
    gauge = Gauge(
        length=float(gauge_obj.get("length", 1.0)),
        time=float(gauge_obj.get("time", 1.0)),
        mass=float(gauge_obj.get("mass", 1.0)),
    )
    metric_obj = data.get("metric")
    g = _parse_metric(metric_obj, consts)
    kgrav = _parse_kgrav(data.get("Kgrav"), metric_obj, consts)
    f_em = _parse_f(data.get("F"), consts)
    bg = Background(g, kgrav, f_em, constants, gauge)

    observers = {"reference": Observer.reference()}
    for name, comps in (data.get("observers") or {}).items():
        if len(comps) != 3:
            raise ScenarioError(f"observers[{name}] needs 3 components")
        observers[name] = Observer(
            tuple(_fdef(f"{name}.o{i + 1}", DIMLESS, str(comps[i]), consts, f"observers[{name}]") for i in range(3))
        )

    a_exprs = tuple(str(e) for e in data.get("A", ["0", "0", "0", "0"]))
    if len(a_exprs) != 4:
        raise ScenarioError("A must have 4 components")
    a_fields = tuple(_fdef(f"A{lam}", DIMLESS, a_exprs[lam], consts, f"A[{lam}]") for lam in range(4))
    qd = QuantumData.standard(bg, a_fields)

    functions = _builtin_functions(bg, a_exprs, consts)
    for name, obj in (data.get("functions") or {}).items():
        functions[name] = _parse_function(name, obj, consts)

    grid_obj = data.get("grid")
    grid = None
    psi0 = None
    normalize = True
    if grid_obj:
        axes = grid_obj.get("axes")
        if not axes or len(axes) != 3:
            raise ScenarioError("grid.axes must list 3 axes")
        grid = GridSpec(tuple(tuple(ax) for ax in axes), float(grid_obj.get("time", 0.0)))
        normalize = bool(grid_obj.get("normalize", True))
        if "psi0" in grid_obj:
            comps = grid_obj["psi0"]
            if len(comps) != 2 or any(len(c) != 2 for c in comps):
                raise ScenarioError("grid.psi0 must be [[re,im],[re,im]]")
            psi0 = SpinorSection(
                tuple(
                    (
                        _fdef(f"psi0_{a}re", DIMLESS, str(comps[a][0]), consts, "grid.psi0"),
                        _fdef(f"psi0_{a}im", DIMLESS, str(comps[a][1]), consts, "grid.psi0"),
                    )
                    for a in range(2)
                )
            )

    suite = data.get("suite", {})
    box = np.array(suite.get("box", [[-1.0, 1.0]] * 4), dtype=float)
    if box.shape != (4, 2):
        raise ScenarioError("suite.box must be 4 [lo, hi] pairs")
    return Scenario(
        background=bg,
        observers=observers,
        qd=qd,
        functions=functions,
        grid=grid,
        psi0=psi0,
        normalize=normalize,
        samples=int(suite.get("samples", 100)),
        seed=int(suite.get("seed", 20240101)),
        box=box,
        tolerances=dict(suite.get("tolerances", {})),
        flags=dict(data.get("flags", {})),
        a_exprs=a_exprs,
    )
