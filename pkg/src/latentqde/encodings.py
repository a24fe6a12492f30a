"""Chebyshev and Fourier basis toolboxes.

Throughout, the *amplitude vector* ``v(x)`` of an encoding is the
prefactor-included vector whose conjugate overlap with a coefficient vector
gives the model value::

    f(x) = sum_j conj(v_j(x)) * f_j

For Chebyshev ``v(x) = N_N(x) |x>`` (real); for Fourier ``v(x) = |x>``.  The
generator G satisfies ``dv/dx = G v`` and derivatives of a model are obtained
with ``G^dagger`` acting on its coefficients.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .sim import MAX_QUBITS, Circuit, H, Phase, Statevector, dft_matrix

CHEBYSHEV = "chebyshev"
FOURIER = "fourier"
FAMILIES = (CHEBYSHEV, FOURIER)


# ---------------------------------------------------------------------------
# Chebyshev primitives
# ---------------------------------------------------------------------------


def chebyshev_T(k: int, x):
    """T_k(x) = cos(k arccos x) on [-1, 1].

    Outside the interval the polynomial continuation is used:
    ``sign^k cosh(k arccosh|x|)`` with sign = sign(x).
    """
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= 1.0
    xi = np.clip(x, -1.0, 1.0)
    xo = np.where(inside, 1.0, np.abs(x))
    out = np.where(
        inside,
        np.cos(k * np.arccos(xi)),
        np.sign(x) ** k * np.cosh(k * np.arccosh(xo)),
    )
    return out if out.ndim else float(out)


def _cheb_table(num: int, x) -> np.ndarray:
    """[T_0(x), ..., T_{num-1}(x)] along the last axis, by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    t = np.empty(x.shape + (num,))
    t[..., 0] = 1.0
    if num > 1:
        t[..., 1] = x
    for k in range(2, num):
        t[..., k] = 2.0 * x * t[..., k - 1] - t[..., k - 2]
    return t


def c_factors(dim: int) -> np.ndarray:
    c = np.ones(dim)
    c[0] = np.sqrt(2.0)
    return c


def chebyshev_nodes(N: int) -> np.ndarray:
    j = np.arange(1 << N)
    return np.cos((2 * j + 1) * np.pi / (1 << (N + 1)))


def chebyshev_amplitudes(N: int, x) -> np.ndarray:
    """N_N(x)|x>: T_0/2^(N/2) on |0>, T_k/2^((N-1)/2) on |k>."""
    dim = 1 << N
    return _cheb_table(dim, x) * (2.0 ** (-(N - 1) / 2) / c_factors(dim))


def chebyshev_norm(N: int, x):
    t = _cheb_table(1 << N, x)
    s = 0.5 + np.sum(t[..., 1:] ** 2, axis=-1)
    out = 2.0 ** (-(N - 1) / 2) * np.sqrt(s)
    return out if np.ndim(out) else float(out)


def chebyshev_state(N: int, x: float) -> Statevector:
    v = chebyshev_amplitudes(N, float(x))
    return Statevector(N, v / np.linalg.norm(v), True)


def chebyshev_derivative_coeffs(n: int, size: int) -> np.ndarray:
    """w such that T_n'(x) = sum_j w_j T_j(x)."""
    if not 0 <= n < size:
        raise ConfigurationError(f"degree {n} does not fit a basis of size {size}", field="n")
    w = np.zeros(size)
    if n == 0:
        return w
    if n % 2 == 0:
        m = n // 2
        w[1:2 * m:2] = 4 * m
    else:
        m = (n - 1) // 2
        w[2:2 * m + 1:2] = 4 * m + 2
        w[0] = 2 * m + 1
    return w


@lru_cache(maxsize=None)
def _chebyshev_generator(N: int) -> np.ndarray:
    dim = 1 << N
    c = c_factors(dim)
    g = np.zeros((dim, dim))
    for i in range(dim):
        # row i: d/dx of amplitude i = T_i'/c_i in units of the other amplitudes
        g[i] = chebyshev_derivative_coeffs(i, dim) * c / c[i]
    g.setflags(write=False)
    return g


def chebyshev_generator(N: int) -> np.ndarray:
    """G with G[i, j] = w^i_j c_j (row 0 vanishes, so the 1/c_i factor is moot)."""
    return _chebyshev_generator(N).astype(complex)


@lru_cache(maxsize=None)
def _chebyshev_transform(N: int) -> np.ndarray:
    u = chebyshev_amplitudes(N, chebyshev_nodes(N)).T
    u.setflags(write=False)
    return u


def chebyshev_transform(N: int) -> np.ndarray:
    """Columns are the amplitude vectors N(x_j)|x_j> at the Chebyshev nodes."""
    return _chebyshev_transform(N).astype(complex)


# ---------------------------------------------------------------------------
# Fourier primitives
# ---------------------------------------------------------------------------


def fourier_amplitudes(N: int, x, freq_qubits: int | None = None) -> np.ndarray:
    """2^(-N/2) exp(2 pi i j x / 2^F), j < 2^N, with F = freq_qubits (default N)."""
    F = N if freq_qubits is None else freq_qubits
    j = np.arange(1 << N)
    x = np.asarray(x, dtype=float)
    return np.exp(2j * np.pi * x[..., None] * j / (1 << F)) / np.sqrt(1 << N)


def fourier_feature_map(N: int, x: float, freq_qubits: int | None = None) -> Circuit:
    """Hadamard layer, then diag(1, exp(i pi x 2^(q+1-F))) on (0-based) qubit q.

    With 1-based index j = q + 1 this is diag(1, exp(i pi x 2^(j-F))).  Qubits
    q >= F (product-basis extensions) use the same rule."""
    F = N if freq_qubits is None else freq_qubits
    gates = [H(q) for q in range(N)]
    gates += [Phase(q, np.pi * x * 2.0 ** (q + 1 - F)) for q in range(N)]
    return Circuit(N, gates)


def fourier_state(N: int, x: float, freq_qubits: int | None = None,
                  check: bool = True) -> Statevector:
    """Fourier encoding prepared by replaying the phase feature map.

    With ``check`` the result is compared against the closed form."""
    st, _ = fourier_feature_map(N, x, freq_qubits).run()
    if check:
        closed = fourier_amplitudes(N, float(x), freq_qubits)
        if np.max(np.abs(st.amplitudes - closed)) > 1e-10:
            raise AssertionError("phase feature map disagrees with closed form")
    return st


def fourier_generator(N: int, freq_qubits: int | None = None) -> np.ndarray:
    """diag(i 2 pi j / 2^F): sum over qubits of i pi 2^(q+1-F) (I - Z)/2."""
    F = N if freq_qubits is None else freq_qubits
    return np.diag(2j * np.pi * np.arange(1 << N) / (1 << F))


def fourier_nodes(N: int, freq_qubits: int | None = None) -> np.ndarray:
    F = N if freq_qubits is None else freq_qubits
    return np.arange(1 << N) * (2.0 ** F / (1 << N))


# ---------------------------------------------------------------------------
# encoding descriptors
# ---------------------------------------------------------------------------


class Encoding:
    """Basis family on ``num_qubits`` qubits."""

    family: str

    def __init__(self, num_qubits: int):
        if not 1 <= num_qubits <= MAX_QUBITS:
            raise ConfigurationError(
                f"qubit count must be in [1, {MAX_QUBITS}], got {num_qubits}", field="qubits")
        self.num_qubits = int(num_qubits)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def evaluate(self, coeffs, x):
        """Decoded function value(s) conj(v(x)) . coeffs."""
        return np.conj(self.amplitudes(x)) @ np.asarray(coeffs)

    def bra(self, x) -> np.ndarray:
        """Row vector r with r . coeffs = f(x)."""
        return np.conj(self.amplitudes(x))

    def state(self, x) -> Statevector:
        v = self.amplitudes(float(x))
        return Statevector(self.num_qubits, v / np.linalg.norm(v), True)

    def load_values(self, values) -> np.ndarray:
        """Coefficient vector whose decode interpolates ``values`` at the nodes."""
        return self.transform() @ np.asarray(values, dtype=complex)

    def embed(self, coeffs, target: "Encoding") -> np.ndarray:
        """Re-express coefficients in a wider encoding of the same family."""
        if target.family != self.family or target.num_qubits < self.num_qubits:
            raise ConfigurationError("can only embed into a wider encoding of the same family")
        out = np.zeros(target.dim, dtype=complex)
        out[: self.dim] = np.asarray(coeffs) * 2.0 ** ((target.num_qubits - self.num_qubits) / 2)
        return out

    def __eq__(self, other):
        return type(self) is type(other) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def key(self) -> tuple:
        return (self.family, self.num_qubits)

    def __repr__(self):
        return f"{type(self).__name__}{self.key()[1:]}"


class ChebyshevEncoding(Encoding):
    family = CHEBYSHEV
    domain = (-1.0, 1.0)

    def basis(self, x) -> np.ndarray:
        return _cheb_table(self.dim, x)

    def amplitudes(self, x) -> np.ndarray:
        return chebyshev_amplitudes(self.num_qubits, x)

    def norm(self, x):
        return chebyshev_norm(self.num_qubits, x)

    def nodes(self) -> np.ndarray:
        return chebyshev_nodes(self.num_qubits)

    def generator(self) -> np.ndarray:
        return chebyshev_generator(self.num_qubits)

    def transform(self) -> np.ndarray:
        return chebyshev_transform(self.num_qubits)

    def unity(self) -> np.ndarray:
        u = np.zeros(self.dim, dtype=complex)
        u[0] = 2.0 ** (self.num_qubits / 2)
        return u

    def product_basis(self) -> "ChebyshevEncoding":
        return ChebyshevEncoding(self.num_qubits + 1)

    def evaluate(self, coeffs, x):
        return self.amplitudes(x) @ np.asarray(coeffs)


class FourierEncoding(Encoding):
    """Fourier basis exp(2 pi i j x / 2^F), j < 2^N; F = freq_qubits.

    Product bases keep F and add qubits, so their frequencies extend beyond
    the original 2^F range on the same variable."""

    family = FOURIER

    def __init__(self, num_qubits: int, freq_qubits: int | None = None):
        super().__init__(num_qubits)
        self.freq_qubits = self.num_qubits if freq_qubits is None else int(freq_qubits)

    @property
    def domain(self):
        return (0.0, float(2 ** self.freq_qubits))

    def key(self):
        return (self.family, self.num_qubits, self.freq_qubits)

    def basis(self, x) -> np.ndarray:
        return fourier_amplitudes(self.num_qubits, x, self.freq_qubits) * np.sqrt(self.dim)

    def amplitudes(self, x) -> np.ndarray:
        return fourier_amplitudes(self.num_qubits, x, self.freq_qubits)

    def norm(self, x):
        return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0

    def nodes(self) -> np.ndarray:
        return fourier_nodes(self.num_qubits, self.freq_qubits)

    def generator(self) -> np.ndarray:
        return fourier_generator(self.num_qubits, self.freq_qubits)

    def transform(self) -> np.ndarray:
        return dft_matrix(self.num_qubits)

    def unity(self) -> np.ndarray:
        u = np.zeros(self.dim, dtype=complex)
        u[0] = 2.0 ** (self.num_qubits / 2)
        return u

    def product_basis(self) -> "FourierEncoding":
        return FourierEncoding(self.num_qubits + 1, self.freq_qubits)

    def state(self, x) -> Statevector:
        return fourier_state(self.num_qubits, float(x), self.freq_qubits)


def make_encoding(family: str, num_qubits: int, **kw) -> Encoding:
    family = family.lower()
    if family == CHEBYSHEV:
        return ChebyshevEncoding(num_qubits)
    if family == FOURIER:
        return FourierEncoding(num_qubits, **kw)
    raise ConfigurationError(f"unknown encoding family {family!r}", field="family")


def product_basis_state(encoding: str | Encoding, N: int | None = None, x: float = 0.0) -> Statevector:
    """The (N+1)-qubit encoding state providing the product basis |xx>."""
    enc = encoding if isinstance(encoding, Encoding) else make_encoding(encoding, N)
    return enc.product_basis().state(x)


def gram_matrix(enc: Encoding) -> np.ndarray:
    """Overlaps of the amplitude vectors at the encoding's nodes."""
    v = enc.amplitudes(enc.nodes())
    return v.conj() @ v.T
