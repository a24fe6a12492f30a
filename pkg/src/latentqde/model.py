"""Quantum models as overlaps, and latent states for DE terms.

A model on a tensor register (first dimension on the most significant
qubits) is ``f(x) = <x|f>>`` with Chebyshev prefactors folded into the
encoding amplitude vectors, see :mod:`latentqde.encodings`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .arith import (
    LoadedFunction,
    evaluate_coefficients,
    load_function,
    multiply_mixtures,
)
from .encodings import Encoding, make_encoding
from .errors import ConfigurationError, UsageError
from .mixture import MixtureState
from .sim import CNOT, MAX_QUBITS, RY, Circuit, DenseOperator, Statevector

__all__ = [
    "Ansatz", "Model", "MixtureState", "DETermSpec", "DETermState",
    "prepare_ansatz", "ansatz_circuit", "model_state", "model_eval", "model_coefficients",
    "derivative_state", "derivative_operator", "unity_coefficients", "build_de_term",
    "multidim_model", "register_offsets",
]


# ---------------------------------------------------------------------------
# ansatz
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ansatz:
    """Alternating RY layers and CNOT chains (control q -> target q+1).

    ``num_rotation_layers`` RY layers with a CNOT chain between consecutive
    ones, so a "depth-six" ansatz has 7 rotation and 6 entangling layers.
    ``parameters[l * n + q]`` is the angle on qubit q in layer l.
    """

    num_qubits: int
    num_rotation_layers: int
    parameters: np.ndarray = None

    def __post_init__(self):
        n_par = self.num_qubits * self.num_rotation_layers
        p = np.zeros(n_par) if self.parameters is None else np.asarray(self.parameters, float).ravel()
        if p.size != n_par:
            raise ConfigurationError(f"ansatz needs {n_par} parameters, got {p.size}", field="parameters")
        if not np.all(np.isfinite(p)):
            raise ConfigurationError("ansatz parameters must be finite", field="parameters")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "parameters", p)

    @property
    def num_parameters(self) -> int:
        return self.num_qubits * self.num_rotation_layers

    @classmethod
    def random(cls, num_qubits: int, num_rotation_layers: int, seed=None) -> "Ansatz":
        rng = np.random.default_rng(seed)
        return cls(num_qubits, num_rotation_layers,
                   rng.uniform(-np.pi, np.pi, num_qubits * num_rotation_layers))

    def with_parameters(self, params) -> "Ansatz":
        return Ansatz(self.num_qubits, self.num_rotation_layers, params)


def ansatz_circuit(a: Ansatz) -> Circuit:
    n, L = a.num_qubits, a.num_rotation_layers
    c = Circuit(n)
    for l in range(L):
        c.extend(RY(q, a.parameters[l * n + q]) for q in range(n))
        if l < L - 1:
            c.extend(CNOT(q, q + 1) for q in range(n - 1))
    return c


def prepare_ansatz(a: Ansatz) -> Statevector:
    psi = kernels.ansatz_states(a.parameters[None, :], a.num_qubits, a.num_rotation_layers)[0]
    return Statevector(a.num_qubits, psi, True)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


def register_offsets(encodings: Sequence[Encoding]) -> list[int]:
    """Lowest qubit of each dimension's register (first dimension is most significant)."""
    offs, acc = [], 0
    for e in reversed(encodings):
        offs.append(acc)
        acc += e.num_qubits
    return offs[::-1]


def unity_coefficients(encodings: Sequence[Encoding]) -> np.ndarray:
    """Coefficients of the constant function 1 on a tensor register."""
    vec = np.ones(1, dtype=complex)
    for e in encodings:
        vec = np.kron(vec, e.unity())
    check = evaluate_coefficients(encodings, vec, *[np.full(3, 0.3 * (e.domain[1] - e.domain[0]) + e.domain[0])
                                                    for e in encodings])
    if np.max(np.abs(check - 1.0)) > 1e-10:
        raise ConfigurationError("the unity function is not in this basis span", field="shift")
    return vec


@dataclass(frozen=True)
class Model:
    """f(x) = scale * <x|ansatz> + shift (shift term only when ``shifted``)."""

    encodings: tuple
    ansatz: Ansatz
    scale: float = 1.0
    shift: float = 0.0
    shifted: bool = False

    def __post_init__(self):
        encs = tuple(self.encodings)
        object.__setattr__(self, "encodings", encs)
        nq = sum(e.num_qubits for e in encs)
        if nq != self.ansatz.num_qubits:
            raise ConfigurationError(
                f"ansatz acts on {self.ansatz.num_qubits} qubits but the encodings need {nq}",
                field="qubits")
        if nq > MAX_QUBITS:
            raise ConfigurationError(f"{nq} qubits exceeds the cap", field="qubits")

    @property
    def num_qubits(self) -> int:
        return self.ansatz.num_qubits

    @property
    def ndim(self) -> int:
        return len(self.encodings)

    def with_params(self, theta=None, scale=None, shift=None) -> "Model":
        return replace(
            self,
            ansatz=self.ansatz if theta is None else self.ansatz.with_parameters(theta),
            scale=self.scale if scale is None else float(scale),
            shift=self.shift if shift is None else float(shift),
        )

    def __call__(self, *xs):
        return model_eval(self, *xs)


def model_state(m: Model) -> MixtureState:
    terms = [(m.scale, prepare_ansatz(m.ansatz))]
    if m.shifted and m.shift != 0.0:
        u = unity_coefficients(m.encodings)
        nrm = np.linalg.norm(u)
        terms.append((m.shift * nrm, Statevector(m.num_qubits, u / nrm, True)))
    return MixtureState(tuple(terms))


def model_coefficients(m: Model) -> np.ndarray:
    return model_state(m).vector(1 << m.num_qubits)


def model_eval(m: Model | MixtureState, *xs, encodings: Sequence[Encoding] | None = None):
    """Evaluate a model (or a bare mixture with ``encodings``) at points ``xs``."""
    if isinstance(m, Model):
        encs, vec = m.encodings, model_coefficients(m)
    else:
        if encodings is None:
            raise UsageError("evaluating a mixture needs its encodings")
        encs, vec = tuple(encodings), m.vector(1 << sum(e.num_qubits for e in encodings))
    if len(xs) != len(encs):
        raise UsageError(f"model has {len(encs)} dimensions, got {len(xs)} coordinates")
    return evaluate_coefficients(encs, vec, *xs)


def derivative_operator(encodings: Sequence[Encoding], order: int, dim: int = 0) -> DenseOperator:
    """(G^dagger)^order on the register of dimension ``dim``."""
    if order < 1:
        raise UsageError("derivative order must be >= 1")
    if not 0 <= dim < len(encodings):
        raise UsageError(f"dimension {dim} out of range")
    g = encodings[dim].generator().conj().T
    return DenseOperator(np.linalg.matrix_power(g, order), register_offsets(encodings)[dim],
                         label=f"d{order}/dx{dim}")


def derivative_state(ms: MixtureState, encodings: Sequence[Encoding] | Encoding,
                     order: int, dim: int = 0) -> MixtureState:
    if isinstance(encodings, Encoding):
        encodings = (encodings,)
    return ms.apply(derivative_operator(encodings, order, dim))


def multidim_model(families: Sequence[str], qubits: Sequence[int], ansatz: Ansatz,
                   scale: float = 1.0, shift: float = 0.0, shifted: bool = False) -> Model:
    if len(families) != len(qubits):
        raise ConfigurationError("one family per dimension is required", field="families")
    encs = tuple(make_encoding(f, q) for f, q in zip(families, qubits))
    return Model(encs, ansatz, scale, shift, shifted)


# ---------------------------------------------------------------------------
# DE terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DETermSpec:
    """weight * function(x) * d^derivative f * f^(power - 1)   (power >= 1)
    or weight * function(x)                                      (power == 0).

    ``derivative`` holds one order per dimension (an int means dimension 0).
    ``function`` is any callable taking one array per dimension.
    """

    weight: complex = 1.0
    derivative: tuple = (0,)
    power: int = 1
    function: Callable | None = None

    def __post_init__(self):
        d = self.derivative
        d = (int(d),) if np.ndim(d) == 0 else tuple(int(v) for v in d)
        object.__setattr__(self, "derivative", d)
        if self.power < 0:
            raise ConfigurationError("model power must be >= 0", field="power")
        if any(v < 0 for v in d):
            raise ConfigurationError("derivative orders must be >= 0", field="derivative")
        if self.power == 0 and any(d):
            raise ConfigurationError("a derivative needs the model (power >= 1)", field="derivative")

    @property
    def num_factors(self) -> int:
        """Multiplicative factors the term needs in latent space."""
        if self.power == 0:
            return 1
        return self.power + (1 if self.function is not None else 0)

    def orders(self, ndim: int) -> tuple:
        d = self.derivative + (0,) * (ndim - len(self.derivative))
        if len(d) != ndim:
            raise ConfigurationError(f"derivative has {len(self.derivative)} entries for {ndim} dims",
                                     field="derivative")
        return d

    def symbolic(self, f: Callable, derivs: dict, *xs):
        """Term value from callables: ``derivs[orders]`` evaluates the derivative."""
        ndim = len(xs)
        g = 1.0 if self.function is None else self.function(*xs)
        if self.power == 0:
            return self.weight * g
        d = self.orders(ndim)
        df = f(*xs) if not any(d) else derivs[d](*xs)
        return self.weight * g * df * f(*xs) ** (self.power - 1)


@dataclass
class DETermState:
    spec: DETermSpec
    state: MixtureState
    encodings: tuple

    @property
    def num_qubits(self) -> int:
        return sum(e.num_qubits for e in self.encodings)

    def vector(self) -> np.ndarray:
        return self.state.vector(1 << self.num_qubits)

    def evaluate(self, *xs):
        return evaluate_coefficients(self.encodings, self.vector(), *xs)


def product_depth(specs: Sequence[DETermSpec]) -> int:
    return max((s.num_factors for s in specs), default=1)


def working_encodings(encodings: Sequence[Encoding], depth: int) -> tuple:
    """Basis on which every term lives: base encodings extended once per extra factor."""
    if depth <= 1:
        return tuple(encodings)
    if len(encodings) != 1:
        raise ConfigurationError("products are supported for one-dimensional models only",
                                 field="power")
    e = encodings[0]
    for _ in range(depth - 1):
        e = e.product_basis()
    if e.num_qubits > MAX_QUBITS:
        raise ConfigurationError(f"product basis needs {e.num_qubits} qubits (cap {MAX_QUBITS})",
                                 field="power")
    return (e,)


def _unity_mixture(encodings) -> MixtureState:
    return MixtureState.from_vector(unity_coefficients(encodings))


def _lift(ms: MixtureState, encs: tuple, target_qubits: int, gate_level: bool):
    """Multiply by unity until the register reaches ``target_qubits``."""
    while encs[0].num_qubits < target_qubits:
        ms = multiply_mixtures(encs[0].family, _unity_mixture(encs), ms, gate_level)
        encs = (encs[0].product_basis(),)
    return ms, encs


def build_de_term(m: Model, spec: DETermSpec, depth: int | None = None,
                  gate_level: bool = True) -> DETermState:
    """Latent state of one DE term on the shared working register.

    ``depth`` is the problem-wide number of multiplicative factors (default:
    this term's own).  Products use the gate-level multiplier unless
    ``gate_level`` is False, in which case the closed-form oracle is used.
    """
    depth = spec.num_factors if depth is None else depth
    if depth < spec.num_factors:
        raise ConfigurationError("depth smaller than the term's factor count", field="depth")
    target = working_encodings(m.encodings, depth)
    encs = m.encodings
    base = model_state(m)

    factors: list[MixtureState] = []
    if spec.function is not None or spec.power == 0:
        if spec.function is None:
            factors.append(_unity_mixture(encs))
        else:
            factors.append(load_function(encs, None, spec.function).mixture())
    if spec.power >= 1:
        d = spec.orders(m.ndim)
        df = base
        for dim, order in enumerate(d):
            if order:
                df = derivative_state(df, encs, order, dim)
        factors.append(df)
        factors.extend([base] * (spec.power - 1))

    acc, acc_encs = factors[0], encs
    for fac in factors[1:]:
        # bring the incoming factor to the accumulator's width, then multiply
        fac_l, _ = _lift(fac, encs, acc_encs[0].num_qubits, gate_level)
        acc = multiply_mixtures(acc_encs[0].family, acc, fac_l, gate_level)
        acc_encs = (acc_encs[0].product_basis(),)
    acc, acc_encs = _lift(acc, acc_encs, target[0].num_qubits, gate_level)
    return DETermState(spec, spec.weight * acc, acc_encs)
