"""Coefficient-space form of a DE's latent terms, for fast repeated evaluation.

A :class:`TermProgram` holds, per term, the fixed pieces of the latent
construction (loaded function coefficients, derivative matrices, unity
lifts) so that the residual vector ``sum_k |DE_k>>`` and its directional
derivatives can be evaluated for batches of model coefficient vectors.
It reproduces :func:`latentqde.model.build_de_term` (oracle multiplier path)
exactly and is what the training loop runs every epoch.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .arith import load_function, multiply_oracle
from .encodings import Encoding
from .model import DETermSpec, product_depth, register_offsets, working_encodings

__all__ = ["TermProgram", "operator_on_register", "evaluation_rows"]


def operator_on_register(encodings: Sequence[Encoding], dim: int, op: np.ndarray) -> np.ndarray:
    """Full-register matrix of ``op`` acting on dimension ``dim`` (first dim most significant)."""
    mats = [op if i == dim else np.eye(e.dim) for i, e in enumerate(encodings)]
    return reduce(np.kron, mats)


def evaluation_rows(encodings: Sequence[Encoding], points) -> np.ndarray:
    """Rows r_i with r_i . coeffs = f(points[i]); ``points`` is (m, ndim)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rows = []
    for p in pts:
        rows.append(reduce(np.kron, [e.bra(np.array([x]))[0] for e, x in zip(encodings, p)]))
    return np.array(rows, dtype=complex).reshape(len(pts), -1)


@dataclass
class _CompiledTerm:
    spec: DETermSpec
    slots: list            # ("const", vec) or ("model", matrix | None)
    linear: np.ndarray | None = None   # dense (W, d) map for single model-slot terms
    constant: np.ndarray | None = None  # (W,) vector for model-free terms

    @property
    def model_slots(self) -> list:
        return [i for i, (kind, _) in enumerate(self.slots) if kind == "model"]


class TermProgram:
    """Latent terms of ``sum_k term_k = 0`` over a base tensor register."""

    def __init__(self, encodings: Sequence[Encoding], specs: Sequence[DETermSpec]):
        self.encodings = tuple(encodings)
        self.specs = tuple(specs)
        self.depth = product_depth(self.specs)
        self.work = working_encodings(self.encodings, self.depth)
        self.dim = int(np.prod([e.dim for e in self.encodings]))
        self.work_dim = int(np.prod([e.dim for e in self.work]))
        self.family = self.encodings[0].family
        # chain of single-register encodings n, n+1, ... for folds (1D only when depth > 1)
        self._chain = [self.encodings[0]]
        for _ in range(self.depth - 1):
            self._chain.append(self._chain[-1].product_basis())
        self._lifts = [self._unity_lift(e) for e in self._chain[:-1]]
        self.terms = [self._compile(s) for s in self.specs]

    # -- construction -------------------------------------------------------

    def _unity_lift(self, enc: Encoding) -> np.ndarray:
        """Matrix of v -> M(unity, v) from ``enc`` to its product basis."""
        eye = np.eye(enc.dim, dtype=complex)
        u = np.broadcast_to(enc.unity(), eye.shape)
        return multiply_oracle(self.family, enc.num_qubits, u, eye).T

    def _lift_from(self, level: int, target: int) -> np.ndarray:
        """Composite lift matrix from chain level ``level`` to ``target``."""
        m = np.eye(self._chain[level].dim, dtype=complex)
        for k in range(level, target):
            m = self._lifts[k] @ m
        return m

    def _compile(self, spec: DETermSpec) -> _CompiledTerm:
        encs = self.encodings
        slots = []
        if spec.function is not None or spec.power == 0:
            if spec.function is None:
                vec = reduce(np.kron, [e.unity() for e in encs])
            else:
                vec = load_function(encs, None, spec.function).coefficients()
            slots.append(("const", np.asarray(vec, dtype=complex)))
        if spec.power >= 1:
            op = None
            for dim, order in enumerate(spec.orders(len(encs))):
                if order:
                    g = np.linalg.matrix_power(encs[dim].generator().conj().T, order)
                    full = operator_on_register(encs, dim, g)
                    op = full if op is None else full @ op
            slots.append(("model", op))
            slots.extend([("model", None)] * (spec.power - 1))
        term = _CompiledTerm(spec, slots)
        top = len(self._chain) - 1
        if len(slots) == 1:
            lift = self._lift_from(0, top) if top else np.eye(self.work_dim, dtype=complex)
            kind, val = slots[0]
            if kind == "const":
                term.constant = spec.weight * (lift @ val)
            else:
                op = np.eye(self.dim) if val is None else val
                term.linear = spec.weight * (lift @ op)
        return term

    # -- evaluation -----------------------------------------------------------

    def _multiply(self, level: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return multiply_oracle(self.family, self._chain[level].num_qubits, a, b)

    def _fold(self, term: _CompiledTerm, values: list) -> np.ndarray:
        """Fold factor batches (each (B, d)) into the working register, weighted."""
        acc, level = values[0], 0
        for v in values[1:]:
            if level:
                v = v @ self._lift_from(0, level).T
            acc = self._multiply(level, acc, v)
            level += 1
        top = len(self._chain) - 1
        if level < top:
            acc = acc @ self._lift_from(level, top).T
        return term.spec.weight * acc

    def _slot_values(self, term: _CompiledTerm, F: np.ndarray) -> list:
        vals = []
        for kind, val in term.slots:
            if kind == "const":
                vals.append(np.broadcast_to(val, (F.shape[0], val.size)))
            else:
                vals.append(F if val is None else F @ val.T)
        return vals

    def term_vectors(self, f) -> np.ndarray:
        """(T, W) array of each term's latent vector for coefficients ``f``."""
        F = np.atleast_2d(np.asarray(f, dtype=complex))
        out = np.empty((len(self.terms), self.work_dim), dtype=complex)
        for k, t in enumerate(self.terms):
            if t.constant is not None:
                out[k] = t.constant
            elif t.linear is not None:
                out[k] = t.linear @ F[0]
            else:
                out[k] = self._fold(t, self._slot_values(t, F))[0]
        return out

    def residual(self, f) -> np.ndarray:
        return self.term_vectors(f).sum(axis=0)

    def term_substitutions(self, k: int, f, V) -> list:
        """For term ``k``: one (B, W) batch per model slot, with that slot fed
        ``V`` (instead of f) and every other slot evaluated at ``f``."""
        t = self.terms[k]
        V = np.atleast_2d(np.asarray(V, dtype=complex))
        if t.constant is not None:
            return []
        if t.linear is not None:
            return [V @ t.linear.T]
        F = np.asarray(f, dtype=complex)[None, :]
        base = self._slot_values(t, F)
        subs = self._slot_values(t, V)
        out = []
        for s in t.model_slots:
            vals = [np.broadcast_to(b, (V.shape[0], b.shape[1])) for b in base]
            vals[s] = subs[s]
            out.append(self._fold(t, vals))
        return out

    def jvp(self, f, V) -> np.ndarray:
        """(B, W) directional derivatives of the residual along the rows of ``V``."""
        V = np.atleast_2d(np.asarray(V, dtype=complex))
        out = np.zeros((V.shape[0], self.work_dim), dtype=complex)
        for k in range(len(self.terms)):
            for piece in self.term_substitutions(k, f, V):
                out += piece
        return out
