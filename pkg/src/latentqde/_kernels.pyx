# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Must stay numerically identical to ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, pow

cnp.import_array()


def ansatz_states(const double[:, ::1] thetas, int n, int layers):
    """Real RY/CNOT-chain ansatz states for a batch of parameter rows.

    Row layout: thetas[b, l * n + q] is the RY angle on qubit q in layer l.
    CNOT layers (control q, target q + 1) sit between consecutive RY layers.
    """
    cdef Py_ssize_t B = thetas.shape[0]
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t b, i, l, q, bit, cbit, tbit
    cdef double c, s, a0, a1, tmp
    out = np.zeros((B, dim), dtype=np.float64)
    cdef double[:, ::1] psi = out
    if thetas.shape[1] != layers * n:
        raise ValueError("theta rows must have layers * n entries")
    for b in range(B):
        psi[b, 0] = 1.0
        for l in range(layers):
            for q in range(n):
                c = cos(0.5 * thetas[b, l * n + q])
                s = sin(0.5 * thetas[b, l * n + q])
                bit = 1 << q
                for i in range(dim):
                    if i & bit == 0:
                        a0 = psi[b, i]
                        a1 = psi[b, i | bit]
                        psi[b, i] = c * a0 - s * a1
                        psi[b, i | bit] = s * a0 + c * a1
            if l < layers - 1:
                for q in range(n - 1):
                    cbit = 1 << q
                    tbit = 1 << (q + 1)
                    for i in range(dim):
                        if (i & cbit) and not (i & tbit):
                            tmp = psi[b, i]
                            psi[b, i] = psi[b, i | tbit]
                            psi[b, i | tbit] = tmp
    return out


def chebyshev_product(const double complex[:, ::1] g, const double complex[:, ::1] h):
    """Row-wise latent Chebyshev product onto the (n+1)-qubit basis."""
    cdef Py_ssize_t B = g.shape[0]
    cdef Py_ssize_t dim = g.shape[1]
    cdef Py_ssize_t b, j, k, d
    cdef double pref, w
    cdef double r2 = sqrt(2.0)
    cdef double complex gh
    if h.shape[0] != B or h.shape[1] != dim:
        raise ValueError("shape mismatch")
    out = np.zeros((B, 2 * dim), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    pref = 1.0 / sqrt(<double>dim)
    for b in range(B):
        for j in range(dim):
            for k in range(dim):
                gh = g[b, j] * h[b, k] * pref
                # c_0 = sqrt(2): divide by c_j c_k, multiply by c of the result
                w = 1.0
                if j == 0:
                    w /= r2
                if k == 0:
                    w /= r2
                if j + k == 0:
                    o[b, 0] += gh * w * r2
                else:
                    o[b, j + k] += gh * w
                d = j - k if j >= k else k - j
                if d == 0:
                    o[b, 0] += gh * w * r2
                else:
                    o[b, d] += gh * w
    return out


def fourier_product(const double complex[:, ::1] g, const double complex[:, ::1] h):
    """Row-wise latent Fourier product (plain convolution) onto n+1 qubits."""
    cdef Py_ssize_t B = g.shape[0]
    cdef Py_ssize_t dim = g.shape[1]
    cdef Py_ssize_t b, j, k
    cdef double pref
    if h.shape[0] != B or h.shape[1] != dim:
        raise ValueError("shape mismatch")
    out = np.zeros((B, 2 * dim), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    pref = sqrt(2.0 / <double>dim)
    for b in range(B):
        for j in range(dim):
            for k in range(dim):
                o[b, j + k] += g[b, j] * h[b, k] * pref
    return out
