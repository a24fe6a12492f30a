"""The four reference problems."""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError
from .model import DETermSpec
from .problem import Condition, FunctionRef, ProblemSpec

__all__ = ["PRESETS", "preset", "preset_names"]


def linear_damped() -> ProblemSpec:
    """df/dx + exp(-kx)(k cos(lx) + l sin(lx)) = 0, f(0) = 1; solution exp(-x) cos(2 pi x)."""
    k, lam = 1.0, 2 * math.pi
    return ProblemSpec(
        name="linear_damped",
        description="df/dx + exp(-k x)(k cos(l x) + l sin(l x)) = 0, f(0) = 1, k = 1, l = 2 pi",
        families=("chebyshev",), qubits=(4,), layers=7,
        terms=(DETermSpec(1.0, (1,), 1),
               DETermSpec(1.0, (0,), 0, FunctionRef("damped_forcing", {"kappa": k, "lam": lam}))),
        initial=(Condition((0.0,), 1.0),),
        analytic=FunctionRef("damped_cosine", {"kappa": k, "lam": lam}),
        train={"epochs": 5000},
    )


def shifted_linear(shifted: bool = True) -> ProblemSpec:
    """df/dx - f + 15 = 0, f(0) = 16; solution 15 + exp(x)."""
    return ProblemSpec(
        name="shifted_linear" if shifted else "shifted_linear_regular",
        description="df/dx - f + 15 = 0, f(0) = 16 "
                    + ("(scaled and shifted model)" if shifted else "(scaled model)"),
        families=("chebyshev",), qubits=(4,), layers=7, shifted=shifted,
        terms=(DETermSpec(1.0, (1,), 1), DETermSpec(-1.0, (0,), 1), DETermSpec(15.0, (0,), 0)),
        initial=(Condition((0.0,), 16.0),),
        analytic=FunctionRef("exp_offset", {"offset": 15.0, "amplitude": 1.0, "rate": 1.0}),
        train={"epochs": 20000},
    )


def nonlinear_riccati() -> ProblemSpec:
    """df/dx - f^2 = 0, f(0) = 1/2; solution 1/(2 - x)."""
    return ProblemSpec(
        name="nonlinear_riccati",
        description="df/dx - f^2 = 0, f(0) = 1/2",
        families=("chebyshev",), qubits=(3,), layers=7,
        terms=(DETermSpec(1.0, (1,), 1), DETermSpec(-1.0, (0,), 2)),
        initial=(Condition((0.0,), 0.5),),
        analytic=FunctionRef("reciprocal", {"pole": 2.0, "scale": 1.0}),
        train={"epochs": 10000},
    )


def multidim_2d() -> ProblemSpec:
    """df/dy - 2y - x = 0, f(x, 0) = 1 at 21 points; solution y^2 + xy + 1."""
    xs = np.linspace(-1.0, 1.0, 23)[1:-1]
    return ProblemSpec(
        name="multidim_2d",
        description="df/dy - 2y - x = 0, f(x, 0) = 1 on 21 points of (-1, 1)",
        families=("chebyshev", "chebyshev"), qubits=(2, 2), layers=7,
        terms=(DETermSpec(1.0, (0, 1), 1),
               DETermSpec(-1.0, (0, 0), 0, FunctionRef("polynomial2d",
                                                       {"coefficients": [[0.0, 2.0], [1.0, 0.0]]}))),
        boundary=tuple(Condition((float(x), 0.0), 1.0) for x in xs),
        analytic=FunctionRef("polynomial2d", {"coefficients": [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]}),
        train={"epochs": 10000},
    )


PRESETS = {
    "linear_damped": linear_damped,
    "shifted_linear": shifted_linear,
    "nonlinear_riccati": nonlinear_riccati,
    "multidim_2d": multidim_2d,
}


def preset_names() -> list:
    return list(PRESETS)


def preset(name: str) -> ProblemSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}",
                                 field="preset") from None
