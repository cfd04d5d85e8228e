import copy
from pathlib import Path

import numpy as np
import pytest

from cqm.fieldlang import FieldDef
from cqm.scenario import load_scenario
from cqm.special import SpecialFunction
from cqm.units import DIMLESS

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

FLAT = {
    "constants": {"m": 1.0, "q": 1.0, "hbar": 1.0, "mu": 1.0, "u0": 1.0},
    "observers": {"drift": ["0.2", "-0.1", "0.15"]},
    "A": ["0", "0", "0", "0"],
    "suite": {"samples": 40, "seed": 11, "box": [[-0.8, 0.8]] * 4},
}

FLAT_MAGNETIC = {
    "constants": {
        "m": 1.0, "q": 1.0, "hbar": 1.0, "mu": 0.7, "u0": 1.0,
        "b": {"value": 0.4, "dim": {"l": "1/2", "t": "0", "m": "1/2"}},
    },
    "F": {"12": "b"},
    "A": ["0", "0", "q*b/hbar*x1", "0"],
    "suite": {"samples": 40, "seed": 12, "box": [[-0.8, 0.8]] * 4},
}

_W = "0.1*x1/(1+0.1*x1*x1)"
CURVED_MAGNETIC = {
    "constants": {
        "m": 1.3, "q": 0.8, "hbar": 1.1, "mu": 0.7, "u0": 0.9,
        "b": {"value": 0.4, "dim": {"l": "1/2", "t": "0", "m": "1/2"}},
    },
    "metric": [
        ["1+0.1*x1*x1", "0", "0"],
        ["0", "1+0.1*x1*x1", "0"],
        ["0", "0", "1+0.1*x1*x1"],
    ],
    "Kgrav": {
        "1_11": _W, "1_22": f"-({_W})", "1_33": f"-({_W})", "2_12": _W, "3_13": _W,
    },
    "F": {"12": "b"},
    "observers": {"drift": ["0.2", "-0.1", "0.15"], "shear": ["0.1*x2", "-0.05*x1", "0.08*x3"]},
    "A": ["0", "0", "q*b/hbar*x1", "0"],
    "suite": {"samples": 40, "seed": 13, "box": [[-0.8, 0.8]] * 4},
}


# fully anisotropic metric with off-diagonal entries: exercises the Cholesky
# triad, the frame coefficients and every index contraction nontrivially
ANISOTROPIC = {
    "constants": {
        "m": 1.1, "q": 0.9, "hbar": 1.2, "mu": 0.6, "u0": 0.85,
        "b": {"value": 0.3, "dim": {"l": "1/2", "t": "0", "m": "1/2"}},
    },
    "metric": [
        ["1+0.1*x1*x1", "0.05*x2*x2", "0"],
        ["0.05*x2*x2", "1+0.1*x3*x3", "0.03*x1"],
        ["0", "0.03*x1", "1.1+0.05*x2*x2"],
    ],
    "Kgrav": "auto",
    "F": {"12": "b*(1+0.2*x1)"},
    "observers": {"drift": ["0.1*x2", "-0.08", "0.05*x1"]},
    "A": ["0", "0", "q*b/hbar*(x1+0.1*x1*x1)", "0"],
    "suite": {"samples": 30, "seed": 17, "box": [[-0.8, 0.8]] * 4},
}


def scenario_dict(name: str) -> dict:
    return copy.deepcopy({"flat": FLAT, "flat_magnetic": FLAT_MAGNETIC,
                          "curved_magnetic": CURVED_MAGNETIC,
                          "anisotropic": ANISOTROPIC}[name])


@pytest.fixture(scope="session")
def flat_scenario():
    return load_scenario(FLAT)


@pytest.fixture(scope="session")
def flat_magnetic_scenario():
    return load_scenario(FLAT_MAGNETIC)


@pytest.fixture(scope="session")
def curved_magnetic_scenario():
    return load_scenario(CURVED_MAGNETIC)


def make_special(consts, f0="0", fi=("0", "0", "0"), fbrev="0", phi=("0", "0", "0"), name="f"):
    return SpecialFunction(
        FieldDef(f"{name}.f0", DIMLESS, f0, consts),
        tuple(FieldDef(f"{name}.f{i}", DIMLESS, fi[i], consts) for i in range(3)),
        FieldDef(f"{name}.fb", DIMLESS, fbrev, consts),
        tuple(FieldDef(f"{name}.phi{a}", DIMLESS, phi[a], consts) for a in range(3)),
        name=name,
    )


def sample_box(rng: np.random.Generator, n: int, half: float = 0.8) -> np.ndarray:
    return rng.uniform(-half, half, (n, 4))
