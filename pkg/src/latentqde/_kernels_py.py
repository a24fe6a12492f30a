"""Pure-numpy versions of the compiled kernels (same signatures, same results)."""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _ry_pairs(n, q):
    idx = np.arange(1 << n)
    i0 = idx[(idx >> q) & 1 == 0]
    return i0, i0 | (1 << q)


@lru_cache(maxsize=64)
def _cnot_chain_perm(n):
    # permutation applied by the whole CNOT chain (q -> q+1, q ascending)
    perm = np.arange(1 << n)
    for q in range(n - 1):
        i = np.arange(1 << n)
        flip = ((i >> q) & 1) == 1
        src = np.where(flip, i ^ (1 << (q + 1)), i)
        perm = perm[src]
    return perm


def ansatz_states(thetas, n, layers):
    thetas = np.ascontiguousarray(thetas, dtype=float)
    if thetas.ndim != 2 or thetas.shape[1] != layers * n:
        raise ValueError("theta rows must have layers * n entries")
    B = thetas.shape[0]
    psi = np.zeros((B, 1 << n))
    psi[:, 0] = 1.0
    perm = _cnot_chain_perm(n)
    half = 0.5 * thetas
    cs, ss = np.cos(half), np.sin(half)
    for l in range(layers):
        for q in range(n):
            i0, i1 = _ry_pairs(n, q)
            c = cs[:, l * n + q, None]
            s = ss[:, l * n + q, None]
            a0, a1 = psi[:, i0], psi[:, i1]
            psi[:, i0] = c * a0 - s * a1
            psi[:, i1] = s * a0 + c * a1
        if l < layers - 1:
            psi = psi[:, perm]
    return psi


@lru_cache(maxsize=16)
def _cheb_product_tensor(dim):
    c = np.ones(2 * dim)
    c[0] = np.sqrt(2.0)
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    w = 1.0 / (c[j] * c[k])
    t = np.zeros((2 * dim, dim, dim))
    np.add.at(t, (j + k, j, k), w * c[j + k])
    d = np.abs(j - k)
    np.add.at(t, (d, j, k), w * c[d])
    t /= np.sqrt(dim)
    return t.reshape(2 * dim, dim * dim)


@lru_cache(maxsize=16)
def _fourier_product_tensor(dim):
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    t = np.zeros((2 * dim, dim, dim))
    np.add.at(t, (j + k, j, k), np.sqrt(2.0 / dim))
    return t.reshape(2 * dim, dim * dim)


def _batched(tensor_fn, g, h):
    g = np.asarray(g, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if g.shape != h.shape:
        raise ValueError("shape mismatch")
    dim = g.shape[1]
    outer = (g[:, :, None] * h[:, None, :]).reshape(g.shape[0], dim * dim)
    return outer @ tensor_fn(dim).T


def chebyshev_product(g, h):
    return _batched(_cheb_product_tensor, g, h)


def fourier_product(g, h):
    return _batched(_fourier_product_tensor, g, h)
