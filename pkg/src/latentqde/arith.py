"""Latent-space multiplication and function loading.

Register layout used by every multiplier circuit on ``n``-qubit inputs
(qubit 0 is the least significant bit):

    result  qubits 0 .. n            (n + 1 qubits, starts in |0>)
    h / k   qubits n+1 .. 2n
    g / j   qubits 2n+1 .. 3n
    anc     qubits 3n+1 .. 3n+3      (Chebyshev coefficient correction only)

so a product input is ``anc (x) g (x) h (x) |0>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .encodings import CHEBYSHEV, FOURIER, Encoding, make_encoding
from .errors import ConfigurationError, DegenerateError, UsageError
from .mixture import MixtureState
from .sim import (
    MAX_QUBITS,
    CNOT,
    CPhase,
    Circuit,
    H,
    Projection,
    RZ,
    Statevector,
    qft_gates,
    tensor,
    zero_state,
)

DEGENERATE_PROBABILITY = 1e-14


def _family(f) -> str:
    fam = f.family if isinstance(f, Encoding) else str(f).lower()
    if fam not in (CHEBYSHEV, FOURIER):
        raise ConfigurationError(f"unknown encoding family {f!r}", field="family")
    return fam


# ---------------------------------------------------------------------------
# coefficient-space oracle
# ---------------------------------------------------------------------------


def multiply_oracle(family, N: int, g_coeffs, h_coeffs) -> np.ndarray:
    """Closed-form latent product onto the (N+1)-qubit product basis.

    Fourier: 2^(-(N-1)/2) sum_{j+k=l} g_j h_k.
    Chebyshev: 2^(-N/2) sum over j+k = l and |j-k| = l of c_l/(c_j c_k) g_j h_k.
    """
    fam = _family(family)
    g = np.atleast_2d(np.asarray(g_coeffs, dtype=complex))
    h = np.atleast_2d(np.asarray(h_coeffs, dtype=complex))
    if g.shape[-1] != 1 << N or h.shape[-1] != 1 << N:
        raise UsageError(f"coefficient vectors must have length {1 << N}")
    g, h = np.broadcast_arrays(g, h)
    fn = kernels.chebyshev_product if fam == CHEBYSHEV else kernels.fourier_product
    out = fn(np.ascontiguousarray(g), np.ascontiguousarray(h))
    return out[0] if np.ndim(g_coeffs) == 1 and np.ndim(h_coeffs) == 1 else out


@lru_cache(maxsize=32)
def _multiplier_matrix(fam: str, N: int) -> np.ndarray:
    dim = 1 << N
    eye = np.eye(dim, dtype=complex)
    g = np.repeat(eye, dim, axis=0)
    h = np.tile(eye, (dim, 1))
    m = multiply_oracle(fam, N, g, h).T
    m.setflags(write=False)
    return m


def multiplier_matrix(family, N: int) -> np.ndarray:
    """M with M @ kron(g, h) == multiply_oracle(g, h); shape (2^(N+1), 4^N)."""
    return _multiplier_matrix(_family(family), N)


# ---------------------------------------------------------------------------
# arithmetic circuits
# ---------------------------------------------------------------------------


def multiplier_layout(n: int) -> dict:
    return {
        "result": list(range(0, n + 1)),
        "h": list(range(n + 1, 2 * n + 1)),
        "g": list(range(2 * n + 1, 3 * n + 1)),
        "anc": [3 * n + 1, 3 * n + 2, 3 * n + 3],
    }


def add_into(src: Sequence[int], dst: Sequence[int], sign: int = 1) -> list:
    """Draper adder: |a>|b> -> |a>|b + sign*a mod 2^len(dst)>.

    ``src`` and ``dst`` list qubits LSB first.  In the Fourier basis of the
    destination, adding a multiplies |m> by exp(2 pi i m a / 2^M), one
    controlled phase per (source bit, destination bit) pair.
    """
    M = len(dst)
    gates = qft_gates(dst)
    for a, qa in enumerate(src):
        for b, qb in enumerate(dst):
            if a + b >= M:
                continue
            gates.append(CPhase(qa, qb, sign * 2 * np.pi * 2.0 ** (a + b) / 2 ** M))
    gates += qft_gates(dst, inverse=True)
    return gates


def _check_width(n: int, extra: int = 0):
    if n < 1:
        raise ConfigurationError("register size must be >= 1", field="n")
    if 3 * n + 1 + extra > MAX_QUBITS:
        raise ConfigurationError(
            f"multiplier on {n}-qubit inputs needs {3 * n + 1 + extra} qubits (cap {MAX_QUBITS})",
            field="n")


def build_adder(n: int, num_qubits: int | None = None) -> Circuit:
    """|j>|k>|0> -> |j>|k>|j+k> (result register must start in |0>)."""
    _check_width(n)
    lay = multiplier_layout(n)
    c = Circuit(num_qubits or 3 * n + 1)
    c.extend(add_into(lay["g"], lay["result"], +1))
    c.extend(add_into(lay["h"], lay["result"], +1))
    return c


def build_subtractor(n: int, num_qubits: int | None = None) -> Circuit:
    """|j>|k>|0> -> |j>|k>|(j-k) mod 2^(n+1)>."""
    _check_width(n)
    lay = multiplier_layout(n)
    c = Circuit(num_qubits or 3 * n + 1)
    c.extend(add_into(lay["g"], lay["result"], +1))
    c.extend(add_into(lay["h"], lay["result"], -1))
    return c


def build_mod(n: int, num_qubits: int | None = None, offset: int = 0) -> Circuit:
    """Map the (n+1)-qubit register holding (j-k) mod 2^(n+1) to |j-k| on its low bits.

    CNOTs controlled by the MSB flip the low bits (2^(n+1)+j-k -> k-j-1 there),
    then the MSB is added to the low bits.  The MSB itself is left as the
    sign flag (1 iff j < k).
    """
    low = [offset + q for q in range(n)]
    msb = offset + n
    c = Circuit(num_qubits or n + 1 + offset)
    c.extend(CNOT(msb, q) for q in low)
    c.extend(add_into([msb], low, +1))
    return c


def build_coeff_correction(n: int, num_qubits: int | None = None) -> Circuit:
    """Rescale each |j>|k>|r> component by c_r/(c_j c_k) (times a global 1/sqrt(2)).

    Three ancillas in |+>; RZ(-pi/2) on each, zero-controlled by j, k and r
    respectively; an uncontrolled RZ(pi/2) on the third; Hadamards; project
    all three onto |0>.  An ancilla that saw a net RZ(phi) contributes
    cos(phi/2) to the surviving amplitude.
    """
    _check_width(n, 3)
    lay = multiplier_layout(n)
    a0, a1, a2 = lay["anc"]
    c = Circuit(num_qubits or 3 * n + 4)
    c.extend(H(a) for a in lay["anc"])
    for anc, reg in ((a0, lay["g"]), (a1, lay["h"]), (a2, lay["result"])):
        g = RZ(anc, -np.pi / 2)
        for q in reg:
            g = g.with_control(q, 0)
        c.append(g)
    c.append(RZ(a2, np.pi / 2))
    c.extend(H(a) for a in lay["anc"])
    c.append(Projection(tuple(lay["anc"]), (0, 0, 0)))
    return c


def build_disentangler(n: int, include_msb: bool = False, num_qubits: int | None = None) -> Circuit:
    """Hadamards on the input registers (and optionally the result MSB), then
    project them onto |0>."""
    lay = multiplier_layout(n)
    qs = lay["g"] + lay["h"] + ([lay["result"][-1]] if include_msb else [])
    c = Circuit(num_qubits or 3 * n + 1)
    c.extend(H(q) for q in qs)
    c.append(Projection(tuple(qs), (0,) * len(qs)))
    return c


# ---------------------------------------------------------------------------
# gate-level multiplier
# ---------------------------------------------------------------------------


@dataclass
class MultiplierResult:
    """``scale * product_state`` equals the latent product coefficients.

    ``branches`` holds the post-projection branch states with their weights
    (two for Chebyshev, one for Fourier); ``success_probabilities`` and
    ``r_tilde`` record the projection statistics per branch.
    """

    product_state: Statevector
    scale: float
    branches: MixtureState
    success_probabilities: dict = field(default_factory=dict)
    r_tilde: dict = field(default_factory=dict)

    def coefficients(self) -> np.ndarray:
        return self.scale * self.product_state.amplitudes


@lru_cache(maxsize=16)
def _branch_circuits(fam: str, n: int):
    if fam == CHEBYSHEV:
        width = 3 * n + 4
        plus = (build_adder(n, width) + build_coeff_correction(n, width)
                + build_disentangler(n, num_qubits=width))
        minus = (build_subtractor(n, width) + build_mod(n, width)
                 + build_coeff_correction(n, width)
                 + build_disentangler(n, include_msb=True, num_qubits=width))
        # amplitude factors the circuits apply deterministically: 2^-n from the
        # input Hadamards, 1/sqrt(2) from C, and another 1/sqrt(2) from the MSB
        return width, {"plus": (plus, 2.0 ** n * np.sqrt(2.0)),
                       "minus": (minus, 2.0 ** n * 2.0)}
    width = 3 * n + 1
    plus = build_adder(n, width) + build_disentangler(n, num_qubits=width)
    return width, {"plus": (plus, 2.0 ** n)}


def apply_multiplier(family, g: Statevector, h: Statevector,
                     shots: int | None = None, seed: int | None = None) -> MultiplierResult:
    """Gate-level latent product of two equal-width states.

    The branch outputs are renormalised by the simulator; their norms are
    recovered from the projection success probabilities (exactly, or from a
    binomial estimate with ``shots``).
    """
    fam = _family(family)
    if g.num_qubits != h.num_qubits:
        raise UsageError("multiplier inputs must have equal width")
    n = g.num_qubits
    _check_width(n, 3 if fam == CHEBYSHEV else 0)
    gn, hn = g.norm(), h.norm()
    if gn == 0.0 or hn == 0.0:
        raise DegenerateError("cannot multiply a zero state")
    width, branches = _branch_circuits(fam, n)
    inp = tensor(Statevector.from_vector(g.amplitudes / gn), Statevector.from_vector(h.amplitudes / hn))
    inp = tensor(inp, zero_state(n + 1))
    if width > inp.num_qubits:
        inp = tensor(zero_state(width - inp.num_qubits), inp)
    rng = np.random.default_rng(seed)
    dim_out = 1 << (n + 1)
    terms, probs, rts = [], {}, {}
    total = np.zeros(dim_out, dtype=complex)
    pref = 2.0 ** (-n / 2) if fam == CHEBYSHEV else 2.0 ** (-(n - 1) / 2)
    for name, (circ, factor) in branches.items():
        out, p = circ.run(inp)
        if p < DEGENERATE_PROBABILITY:
            raise DegenerateError(f"{name} branch projection probability {p:.3e} is degenerate")
        if shots:
            p = rng.binomial(int(shots), p) / int(shots)
            if p == 0.0:
                raise DegenerateError(f"{name} branch: no successful shots")
        res = out.amplitudes[:dim_out]
        weight = pref * factor * np.sqrt(p) * gn * hn
        probs[name], rts[name] = p, np.sqrt(p)
        terms.append((weight, Statevector(n + 1, res / np.linalg.norm(res), True)))
        total += weight * res
    scale = float(np.linalg.norm(total))
    if scale == 0.0:
        raise DegenerateError("product state vanished")
    return MultiplierResult(Statevector(n + 1, total / scale, True), scale,
                            MixtureState(tuple(terms)), probs, rts)


def multiply_mixtures(family, a: MixtureState, b: MixtureState,
                      gate_level: bool = True) -> MixtureState:
    """Bilinear extension of the multiplier to mixtures."""
    out = []
    for ca, sa in a.terms:
        for cb, sb in b.terms:
            if gate_level:
                r = apply_multiplier(family, sa, sb)
                out.append((ca * cb * r.scale, r.product_state))
            else:
                v = multiply_oracle(family, sa.num_qubits, sa.amplitudes, sb.amplitudes)
                nrm = np.linalg.norm(v)
                if nrm > 0:
                    out.append((ca * cb * nrm, Statevector(sa.num_qubits + 1, v / nrm, True)))
    return MixtureState(tuple(out))


# ---------------------------------------------------------------------------
# function loading
# ---------------------------------------------------------------------------


@dataclass
class LoadedFunction:
    """``scale * state`` are latent coefficients interpolating g at the nodes."""

    state: Statevector
    scale: float
    encodings: tuple

    def coefficients(self) -> np.ndarray:
        return self.scale * self.state.amplitudes

    def mixture(self, weight: complex = 1.0) -> MixtureState:
        return MixtureState.single(self.state, weight * self.scale)

    def __call__(self, *xs):
        return evaluate_coefficients(self.encodings, self.coefficients(), *xs)


def evaluate_coefficients(encodings: Sequence[Encoding], coeffs, *xs):
    """Decode a coefficient vector on a tensor register at points ``xs``
    (one array per dimension, broadcast together)."""
    if len(xs) != len(encodings):
        raise UsageError(f"expected {len(encodings)} coordinates, got {len(xs)}")
    xs = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in xs])
    shape = xs[0].shape
    t = np.asarray(coeffs, dtype=complex).reshape([e.dim for e in encodings])
    rows = [e.bra(x.ravel()) for e, x in zip(encodings, xs)]  # (m, d_i)
    # contract dimension by dimension, keeping the point axis
    out = np.einsum("md,d...->m...", rows[0], t)
    for r in rows[1:]:
        out = np.einsum("md,md...->m...", r, out)
    return out.reshape(shape) if shape else complex(out.ravel()[0])


def load_function(family_or_encodings, N: int | Sequence[int] | None = None,
                  g: Callable | None = None) -> LoadedFunction:
    """Load g by its node values through the basis transform(s).

    ``family_or_encodings`` is a family name (with ``N``) or a sequence of
    Encoding objects for a tensor register; ``g`` takes one argument per
    dimension.
    """
    if isinstance(family_or_encodings, (str, Encoding)):
        if isinstance(family_or_encodings, Encoding):
            encs = (family_or_encodings,)
        else:
            encs = (make_encoding(family_or_encodings, int(N)),)
    else:
        encs = tuple(family_or_encodings)
    grids = np.meshgrid(*[e.nodes() for e in encs], indexing="ij")
    with np.errstate(invalid="ignore", over="ignore"):  # non-finite values rejected below
        values = np.asarray(g(*grids), dtype=complex) * np.ones(grids[0].shape)
    if not np.all(np.isfinite(values)):
        raise ConfigurationError("function is not finite at every node", field="function")
    coeffs = values.reshape(-1)
    for axis, e in enumerate(encs):
        t = coeffs.reshape([x.dim for x in encs])
        t = np.moveaxis(np.tensordot(e.transform(), t, axes=([1], [axis])), 0, axis)
        coeffs = t.reshape(-1)
    scale = float(np.linalg.norm(coeffs))
    if scale == 0.0:
        raise DegenerateError("function vanishes at every node; represent it by a zero weight")
    nq = sum(e.num_qubits for e in encs)
    return LoadedFunction(Statevector(nq, coeffs / scale, True), scale, encs)
