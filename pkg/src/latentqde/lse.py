"""Variation-free path for linear DEs: assemble D f = g and solve it classically."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .arith import evaluate_coefficients
from .encodings import Encoding
from .errors import UnsupportedProblemError
from .problem import ProblemSpec
from .program import TermProgram, evaluation_rows, operator_on_register

__all__ = ["LinearSystem", "LSESolution", "assemble_lse", "append_initial_row", "solve_lse",
           "solve_problem"]


@dataclass(frozen=True)
class LinearSystem:
    """Rows of D act on base-register coefficients; ``labels`` name each row's origin."""

    D: np.ndarray
    g: np.ndarray
    labels: tuple
    encodings: tuple          # base encodings (columns)
    row_encodings: tuple      # working encodings of the DE row block

    @property
    def shape(self):
        return self.D.shape


@dataclass(frozen=True)
class LSESolution:
    coefficients: np.ndarray
    residual: float
    rank: int
    rank_deficient: bool
    encodings: tuple

    def __call__(self, *xs):
        return evaluate_coefficients(self.encodings, self.coefficients, *xs)

    def derivative(self, *xs, dim: int = 0, order: int = 1):
        g = np.linalg.matrix_power(self.encodings[dim].generator().conj().T, order)
        op = operator_on_register(self.encodings, dim, g)
        return evaluate_coefficients(self.encodings, op @ self.coefficients, *xs)


def assemble_lse(problem: ProblemSpec, family: str | None = None,
                 N: int | Sequence[int] | None = None) -> LinearSystem:
    """D = sum of the f-dependent term maps, g = -(sum of the f-free term vectors).

    Terms with a function factor act through the multiplier with that
    function fixed, so their rows live on the product basis; every other
    term is lifted there by multiplying with unity.
    """
    if family is not None or N is not None:
        fams = problem.families if family is None else (family,) * problem.ndim
        qbs = problem.qubits if N is None else tuple(np.atleast_1d(N).tolist())
        if len(qbs) == 1 and problem.ndim > 1:
            qbs = qbs * problem.ndim
        problem = replace(problem, families=fams, qubits=qbs)
    if not problem.is_linear:
        raise UnsupportedProblemError("nonlinear problem unsupported in lse mode", field="mode")
    prog = TermProgram(problem.encodings(), problem.terms)
    d = prog.dim
    D = np.zeros((prog.work_dim, d), dtype=complex)
    g = np.zeros(prog.work_dim, dtype=complex)
    eye = np.eye(d, dtype=complex)
    zero = np.zeros(d, dtype=complex)
    for k, term in enumerate(prog.terms):
        if term.constant is not None:
            g -= term.constant
        else:
            (block,) = prog.term_substitutions(k, zero, eye)
            D += block.T
    labels = tuple(["de"] * prog.work_dim)
    return LinearSystem(D, g, labels, prog.encodings, prog.work)


def append_initial_row(sys: LinearSystem, x0, f0: complex, weight: float = 1.0) -> LinearSystem:
    """Add the row  weight * <x0|  (decoding included) with right-hand side weight * f0."""
    row = evaluation_rows(sys.encodings, [np.atleast_1d(x0)])
    D = np.vstack([sys.D, weight * row])
    g = np.concatenate([sys.g, [weight * f0]])
    return LinearSystem(D, g, sys.labels + ("init",), sys.encodings, sys.row_encodings)


def solve_lse(sys: LinearSystem, rcond: float | None = None) -> LSESolution:
    """Least-squares (minimum-norm when rank deficient) solution of D v = g."""
    v, _, rank, _ = np.linalg.lstsq(sys.D, sys.g, rcond=rcond)
    res = float(np.linalg.norm(sys.D @ v - sys.g))
    return LSESolution(v, res, int(rank), int(rank) < sys.D.shape[1], sys.encodings)


def solve_problem(problem: ProblemSpec) -> LSESolution:
    """Assemble, append every initial/boundary/data condition, and solve."""
    sys = assemble_lse(problem)
    for c in problem.initial + problem.boundary + problem.data:
        sys = append_initial_row(sys, c.point, c.value, problem.lse_weight)
    return solve_lse(sys)
