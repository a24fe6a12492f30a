"""Dense statevector simulator.

Bit ordering: qubit ``q`` is bit ``q`` of the basis-state integer, i.e. qubit 0
is the least significant bit.  ``tensor(a, b)`` places ``a`` on the more
significant qubits.  Global phases are never tracked.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ConfigurationError, DegenerateError, UsageError

MAX_QUBITS = 14
NORM_TOL = 1e-12


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Statevector:
    num_qubits: int
    amplitudes: np.ndarray
    is_normalized: bool = True

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if self.num_qubits < 1 or self.num_qubits > MAX_QUBITS:
            raise ConfigurationError(
                f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits}",
                field="num_qubits",
            )
        if amps.size != 1 << self.num_qubits:
            raise UsageError(
                f"expected {1 << self.num_qubits} amplitudes, got {amps.size}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if self.is_normalized and abs(np.vdot(amps, amps).real - 1.0) > 1e-10:
            raise UsageError("state flagged normalized but its norm is not 1")

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> "Statevector":
        """Wrap an amplitude vector; ``normalize`` rescales it to unit norm."""
        vec = np.asarray(vec, dtype=complex).ravel()
        n = int(round(np.log2(vec.size))) if vec.size else 0
        if vec.size == 0 or 1 << n != vec.size:
            raise UsageError(f"vector length {vec.size} is not a power of two")
        nrm = float(np.linalg.norm(vec))
        if normalize:
            if nrm == 0.0:
                raise DegenerateError("cannot normalize the zero vector")
            return cls(n, vec / nrm, True)
        return cls(n, vec, abs(nrm - 1.0) <= NORM_TOL)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "Statevector":
        return Statevector.from_vector(self.amplitudes, normalize=True)

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def __repr__(self):
        return f"Statevector(num_qubits={self.num_qubits}, is_normalized={self.is_normalized})"


def zero_state(n: int) -> Statevector:
    if not 1 <= n <= MAX_QUBITS:
        raise ConfigurationError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}", field="n")
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    return Statevector(n, amps, True)


def basis_state(n: int, index: int) -> Statevector:
    s = np.zeros(1 << n, dtype=complex)
    s[index] = 1.0
    return Statevector(n, s, True)


def tensor(a: Statevector, b: Statevector) -> Statevector:
    n = a.num_qubits + b.num_qubits
    if n > MAX_QUBITS:
        raise ConfigurationError(f"tensor product needs {n} qubits (cap {MAX_QUBITS})", field="n")
    return Statevector(n, np.kron(a.amplitudes, b.amplitudes),
                       a.is_normalized and b.is_normalized)


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b>, with ``a`` conjugated."""
    if a.num_qubits != b.num_qubits:
        raise UsageError(f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


# ---------------------------------------------------------------------------
# gates and circuit elements
# ---------------------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)


def _ry(a):
    c, s = np.cos(a / 2), np.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(a):
    return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])


@dataclass(frozen=True, eq=False)
class Gate:
    """A (multi-)controlled single-qubit unitary.

    ``control_states`` gives the value each control must hold (1 by default);
    zero-controls implement the "controlled by |j> = |0>" pattern directly.
    """

    kind: str
    matrix: np.ndarray
    target: int
    controls: tuple = ()
    control_states: tuple = ()
    params: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex).reshape(2, 2)
        if np.max(np.abs(m.conj().T @ m - np.eye(2))) > NORM_TOL:
            raise UsageError(f"gate {self.kind} matrix is not unitary")
        object.__setattr__(self, "matrix", m)
        ctrls = tuple(int(c) for c in self.controls)
        if self.target in ctrls or len(set(ctrls)) != len(ctrls):
            raise UsageError(f"gate {self.kind}: target/control index collision")
        states = tuple(self.control_states) or (1,) * len(ctrls)
        if len(states) != len(ctrls):
            raise UsageError("control_states must match controls")
        object.__setattr__(self, "controls", ctrls)
        object.__setattr__(self, "control_states", tuple(int(s) for s in states))

    @property
    def qubits(self) -> tuple:
        return (self.target,) + self.controls

    def dagger(self) -> "Gate":
        return Gate(self.kind + "_dg" if not self.kind.endswith("_dg") else self.kind[:-3],
                    self.matrix.conj().T, self.target, self.controls, self.control_states,
                    tuple(-p for p in self.params))

    def with_control(self, qubit: int, state: int = 1) -> "Gate":
        return Gate(self.kind, self.matrix, self.target, self.controls + (qubit,),
                    self.control_states + (state,), self.params)

    def shifted(self, offset: int) -> "Gate":
        return Gate(self.kind, self.matrix, self.target + offset,
                    tuple(c + offset for c in self.controls), self.control_states, self.params)


def H(q):
    return Gate("H", _H, q)


def X(q):
    return Gate("X", _X, q)


def RY(q, angle):
    return Gate("RY", _ry(angle), q, params=(float(angle),))


def RZ(q, angle):
    return Gate("RZ", _rz(angle), q, params=(float(angle),))


def S(q):
    return Gate("S", np.diag([1, 1j]), q)


def Sdg(q):
    return Gate("S_dg", np.diag([1, -1j]), q)


def Phase(q, angle):
    return Gate("Phase", np.diag([1, np.exp(1j * angle)]), q, params=(float(angle),))


def CNOT(control, target):
    return Gate("CNOT", _X, target, (control,))


def CZ(control, target):
    return Gate("CZ", _Z, target, (control,))


def CPhase(control, target, angle):
    return Gate("CPhase", np.diag([1, np.exp(1j * angle)]), target, (control,),
                params=(float(angle),))


def Unitary(q, matrix, controls=(), control_states=()):
    return Gate("U", matrix, q, tuple(controls), tuple(control_states))


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Arbitrary (possibly non-unitary) matrix on the contiguous span
    ``start .. start + m - 1``; matrix index bit b is qubit ``start + b``."""

    matrix: np.ndarray
    start: int = 0
    controls: tuple = ()
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] & (m.shape[0] - 1):
            raise UsageError(f"dense operator must be 2^m x 2^m, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        if set(self.controls) & set(self.span):
            raise UsageError("dense operator controls overlap its span")

    @property
    def width(self) -> int:
        return int(self.matrix.shape[0]).bit_length() - 1

    @property
    def span(self) -> range:
        return range(self.start, self.start + self.width)

    def dagger(self) -> "DenseOperator":
        return DenseOperator(self.matrix.conj().T, self.start, self.controls, self.label + "^dg")

    def with_control(self, qubit: int) -> "DenseOperator":
        return DenseOperator(self.matrix, self.start, self.controls + (qubit,), self.label)

    def shifted(self, offset: int) -> "DenseOperator":
        return DenseOperator(self.matrix, self.start + offset,
                             tuple(c + offset for c in self.controls), self.label)

    def is_unitary(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


@dataclass(frozen=True)
class Projection:
    """Projective measurement marker: collapse ``qubits`` onto ``outcome``."""

    qubits: tuple
    outcome: tuple

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "outcome", _parse_outcome(self.outcome, len(self.qubits)))

    def shifted(self, offset: int) -> "Projection":
        return Projection(tuple(q + offset for q in self.qubits), self.outcome)


Element = Union[Gate, DenseOperator, Projection]


def _parse_outcome(outcome, k) -> tuple:
    if isinstance(outcome, str):
        bits = tuple(int(c) for c in outcome)
    elif isinstance(outcome, (int, np.integer)):
        bits = tuple((int(outcome) >> i) & 1 for i in range(k))
    else:
        bits = tuple(int(b) for b in outcome)
    if len(bits) != k or any(b not in (0, 1) for b in bits):
        raise UsageError(f"outcome {outcome!r} does not match {k} qubits")
    return bits


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _pair_indices(n: int, target: int, controls: tuple, states: tuple):
    idx = np.arange(1 << n)
    sel = ((idx >> target) & 1) == 0
    for c, s in zip(controls, states):
        sel &= ((idx >> c) & 1) == s
    i0 = idx[sel]
    i0.setflags(write=False)
    i1 = i0 | (1 << target)
    i1.setflags(write=False)
    return i0, i1


@lru_cache(maxsize=1024)
def _match_mask(n: int, qubits: tuple, outcome: tuple) -> np.ndarray:
    idx = np.arange(1 << n)
    sel = np.ones(1 << n, dtype=bool)
    for q, b in zip(qubits, outcome):
        sel &= ((idx >> q) & 1) == b
    sel.setflags(write=False)
    return sel


def _check_indices(n, qubits):
    for q in qubits:
        if not 0 <= q < n:
            raise UsageError(f"qubit index {q} out of range for {n} qubits")


def _apply_gate_vec(vec: np.ndarray, n: int, g: Gate) -> np.ndarray:
    i0, i1 = _pair_indices(n, g.target, g.controls, g.control_states)
    out = vec.copy()
    a0, a1 = vec[i0], vec[i1]
    m = g.matrix
    out[i0] = m[0, 0] * a0 + m[0, 1] * a1
    out[i1] = m[1, 0] * a0 + m[1, 1] * a1
    return out


def _apply_dense_vec(vec: np.ndarray, n: int, op: DenseOperator) -> np.ndarray:
    w, lo = op.width, op.start
    hi = n - lo - w
    t = vec.reshape(1 << hi, 1 << w, 1 << lo)
    out = np.einsum("ij,ajb->aib", op.matrix, t).reshape(-1)
    if op.controls:
        mask = _match_mask(n, op.controls, (1,) * len(op.controls))
        out = np.where(mask, out, vec)
    return out


def apply_gate(s: Statevector, g: Gate) -> Statevector:
    _check_indices(s.num_qubits, g.qubits)
    return Statevector(s.num_qubits, _apply_gate_vec(s.amplitudes, s.num_qubits, g),
                       s.is_normalized)


def apply_dense(s: Statevector, op: DenseOperator) -> Statevector:
    """Matrix-vector product on the operator span.  The result is flagged
    unnormalized and is never rescaled."""
    if op.start < 0 or op.start + op.width > s.num_qubits:
        raise UsageError(
            f"operator span {op.start}..{op.start + op.width - 1} exceeds {s.num_qubits} qubits"
        )
    _check_indices(s.num_qubits, op.controls)
    return Statevector(s.num_qubits, _apply_dense_vec(s.amplitudes, s.num_qubits, op), False)


def project(s: Statevector, qubits: Sequence[int], outcome) -> tuple[Statevector, float]:
    """Collapse ``qubits`` onto ``outcome``; returns the renormalised state and
    the outcome probability.  Raises DegenerateError for zero-probability outcomes."""
    qubits = tuple(int(q) for q in qubits)
    _check_indices(s.num_qubits, qubits)
    outcome = _parse_outcome(outcome, len(qubits))
    mask = _match_mask(s.num_qubits, qubits, outcome)
    amps = s.amplitudes
    total = float(np.vdot(amps, amps).real)
    kept = np.where(mask, amps, 0.0)
    good = float(np.vdot(kept, kept).real)
    if total == 0.0 or good == 0.0:
        raise DegenerateError(f"projection of qubits {qubits} onto {outcome} has zero probability")
    return Statevector(s.num_qubits, kept / np.sqrt(good), True), good / total


def sample(s: Statevector, shots: int, seed: int | None = None) -> dict[int, int]:
    """Multinomial measurement counts in the computational basis."""
    if not s.is_normalized:
        raise UsageError("sampling requires a normalized state")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), s.probabilities())
    return {int(i): int(c) for i, c in enumerate(counts) if c}


# ---------------------------------------------------------------------------
# circuits
# ---------------------------------------------------------------------------


@dataclass
class Circuit:
    num_qubits: int
    elements: list = field(default_factory=list)

    def append(self, el: Element) -> "Circuit":
        self.elements.append(el)
        return self

    def extend(self, els: Iterable[Element]) -> "Circuit":
        self.elements.extend(els)
        return self

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise UsageError("cannot concatenate circuits of different width")
        return Circuit(self.num_qubits, self.elements + other.elements)

    def __len__(self):
        return len(self.elements)

    def run(self, state: Statevector | None = None) -> tuple[Statevector, float]:
        """Replay on ``state`` (default |0...0>).

        Returns the final state and the joint success probability of all
        projections (1.0 when there are none).  Dense insertions leave the
        state unnormalized; a later projection renormalises it.
        """
        n = self.num_qubits
        s = zero_state(n) if state is None else state
        if s.num_qubits != n:
            raise UsageError(f"circuit on {n} qubits applied to a {s.num_qubits}-qubit state")
        vec = s.amplitudes
        normalized = s.is_normalized
        prob = 1.0
        for el in self.elements:
            if isinstance(el, Gate):
                _check_indices(n, el.qubits)
                vec = _apply_gate_vec(vec, n, el)
            elif isinstance(el, DenseOperator):
                vec = apply_dense(Statevector(n, vec, False), el).amplitudes
                normalized = False
            elif isinstance(el, Projection):
                st, p = project(Statevector(n, vec, False), el.qubits, el.outcome)
                vec, normalized = st.amplitudes, True
                prob *= p
            else:
                raise UsageError(f"unknown circuit element {el!r}")
        return Statevector(n, vec, normalized and abs(np.linalg.norm(vec) - 1) <= 1e-10), prob

    def inverse(self) -> "Circuit":
        els = []
        for el in reversed(self.elements):
            if isinstance(el, Projection):
                raise UsageError("a circuit with projections has no inverse")
            els.append(el.dagger())
        return Circuit(self.num_qubits, els)

    def controlled(self, control: int) -> "Circuit":
        """Every element conditioned on ``control``; the control qubit must be
        one of this circuit's qubits and unused by its elements."""
        els = []
        for el in self.elements:
            if isinstance(el, Projection):
                raise UsageError("cannot control a projection")
            els.append(el.with_control(control))
        return Circuit(self.num_qubits, els)

    def widened(self, num_qubits: int, offset: int = 0) -> "Circuit":
        """Same circuit embedded in a wider register, shifted by ``offset``."""
        if self.num_qubits + offset > num_qubits:
            raise UsageError("widened register too small")
        return Circuit(num_qubits, [el.shifted(offset) for el in self.elements])

    def matrix(self) -> np.ndarray:
        """Dense matrix (columns are images of basis states); unitary circuits only."""
        dim = 1 << self.num_qubits
        cols = []
        for k in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[k] = 1
            st, _ = Circuit(self.num_qubits, [el for el in self.elements
                                              if not isinstance(el, Projection)]).run(
                Statevector(self.num_qubits, e, True))
            cols.append(st.amplitudes)
        return np.array(cols).T


def swap_gates(a: int, b: int) -> list[Gate]:
    return [CNOT(a, b), CNOT(b, a), CNOT(a, b)]


def qft_gates(qubits: Sequence[int], inverse: bool = False) -> list[Gate]:
    """QFT on ``qubits`` (listed LSB first), including the final swaps, so the
    register matrix is exactly the DFT  F[j, k] = exp(2 pi i j k / 2^n) / 2^(n/2)."""
    qubits = list(qubits)
    n = len(qubits)
    gates: list[Gate] = []
    for j in reversed(range(n)):
        gates.append(H(qubits[j]))
        for k in reversed(range(j)):
            gates.append(CPhase(qubits[k], qubits[j], np.pi / (1 << (j - k))))
    for i in range(n // 2):
        gates.extend(swap_gates(qubits[i], qubits[n - 1 - i]))
    if inverse:
        gates = [g.dagger() for g in reversed(gates)]
    return gates


def qft_circuit(n: int, inverse: bool = False) -> Circuit:
    if n < 1:
        raise ConfigurationError("QFT needs at least one qubit", field="n")
    if n > MAX_QUBITS:
        raise ConfigurationError(f"QFT on {n} qubits exceeds the cap", field="n")
    return Circuit(n, qft_gates(range(n), inverse))


def dft_matrix(n: int) -> np.ndarray:
    dim = 1 << n
    j = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(j, j) / dim) / np.sqrt(dim)


def state_preparation(target: np.ndarray, start: int = 0) -> DenseOperator:
    """Unitary (Householder reflection) mapping |0> to the normalised ``target``.

    Stands in for an unspecified state-preparation routine."""
    v = np.asarray(target, dtype=complex).ravel()
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise DegenerateError("cannot prepare the zero vector")
    v = v / nrm
    dim = v.size
    # phase-align so the reflection is well conditioned
    phase = v[0] / abs(v[0]) if abs(v[0]) > 1e-15 else 1.0
    e0 = np.zeros(dim, dtype=complex)
    e0[0] = 1.0
    u = e0 - v / phase
    un = np.linalg.norm(u)
    if un < 1e-15:
        m = np.eye(dim, dtype=complex) * phase
    else:
        u /= un
        m = phase * (np.eye(dim) - 2 * np.outer(u, u.conj()))
    return DenseOperator(m, start, label="prep")
