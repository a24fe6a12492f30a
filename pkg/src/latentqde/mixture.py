"""Weighted sums of quantum states (the |.>> objects)."""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np

from .errors import UsageError
from .sim import DenseOperator, Statevector, apply_dense


@dataclass(frozen=True)
class MixtureState:
    """Classically weighted sum  sum_i c_i |psi_i>  of states on one register.

    Term states are kept unit-norm where possible; any norm produced by a
    non-unitary operation is moved into the coefficient.
    """

    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((complex(c), s) for c, s in self.terms)
        widths = {s.num_qubits for _, s in terms}
        if len(widths) > 1:
            raise UsageError(f"mixture terms live on different registers: {sorted(widths)}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def single(cls, state: Statevector, coefficient: complex = 1.0) -> "MixtureState":
        return cls(((coefficient, state),))

    @classmethod
    def from_vector(cls, vec, coefficient: complex = 1.0) -> "MixtureState":
        """One-term mixture holding ``vec`` as (norm * coefficient) x unit state."""
        vec = np.asarray(vec, dtype=complex)
        nrm = float(np.linalg.norm(vec))
        if nrm == 0.0:
            return cls()
        return cls(((coefficient * nrm, Statevector.from_vector(vec / nrm, normalize=True)),))

    @property
    def num_qubits(self) -> int | None:
        return self.terms[0][1].num_qubits if self.terms else None

    def vector(self, dim: int | None = None) -> np.ndarray:
        """Summed (unnormalised) amplitude vector."""
        if not self.terms:
            if dim is None:
                raise UsageError("empty mixture has no register size; pass dim")
            return np.zeros(dim, dtype=complex)
        return sum(c * s.amplitudes for c, s in self.terms)

    def __add__(self, other: "MixtureState") -> "MixtureState":
        return MixtureState(self.terms + other.terms)

    def __sub__(self, other: "MixtureState") -> "MixtureState":
        return self + (-1.0) * other

    def __mul__(self, a: Number) -> "MixtureState":
        return MixtureState(tuple((a * c, s) for c, s in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def apply(self, op: DenseOperator) -> "MixtureState":
        out = []
        for c, s in self.terms:
            new = apply_dense(s, op)
            nrm = new.norm()
            if nrm > 0.0:
                out.append((c * nrm, Statevector(s.num_qubits, new.amplitudes / nrm, True)))
        return MixtureState(tuple(out))

    def inner(self, other: "MixtureState") -> complex:
        """<<self|other>> = sum conj(c_a) c_b <a|b>."""
        total = 0j
        for ca, a in self.terms:
            for cb, b in other.terms:
                if a.num_qubits != b.num_qubits:
                    raise UsageError("register mismatch in mixture overlap")
                total += np.conj(ca) * cb * np.vdot(a.amplitudes, b.amplitudes)
        return complex(total)

    def norm2(self) -> float:
        return self.inner(self).real

    def __len__(self):
        return len(self.terms)
