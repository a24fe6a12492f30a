"""Solving differential equations in the latent space of quantum feature maps.

Functions are stored as weighted sums of quantum states whose overlap with an
encoding state gives f(x).  Derivatives, products and function loading act
on those states, so a DE residual becomes a state whose norm is minimized
variationally (or, for linear DEs, solved as a linear system).
"""
from .arith import apply_multiplier, load_function, multiply_oracle
from .encodings import ChebyshevEncoding, FourierEncoding, make_encoding
from .errors import (
    ConfigurationError,
    DegenerateError,
    LatentQDEError,
    NumericalError,
    UnsupportedProblemError,
    UsageError,
)
from .kernels import BACKEND
from .lse import assemble_lse, solve_lse, solve_problem
from .mixture import MixtureState
from .model import Ansatz, DETermSpec, Model, build_de_term, model_eval, model_state
from .presets import preset
from .problem import Condition, FunctionRef, ProblemSpec, dump_problem, load_problem
from .sim import Circuit, Statevector
from .training import TrainConfig, train, train_seeds

__version__ = "0.1.0"

__all__ = [
    "Ansatz", "BACKEND", "ChebyshevEncoding", "Circuit", "Condition", "ConfigurationError",
    "DETermSpec", "DegenerateError", "FourierEncoding", "FunctionRef", "LatentQDEError",
    "MixtureState", "Model", "NumericalError", "ProblemSpec", "Statevector", "TrainConfig",
    "UnsupportedProblemError", "UsageError", "apply_multiplier", "assemble_lse",
    "build_de_term", "dump_problem", "load_function", "load_problem", "make_encoding",
    "model_eval", "model_state", "multiply_oracle", "preset", "solve_lse", "solve_problem",
    "train", "train_seeds",
]
