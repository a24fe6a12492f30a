import importlib
import subprocess
import sys

import numpy as np
import pytest

from latentqde import _kernels_py, kernels
from latentqde.arith import multiply_oracle
from latentqde.model import Ansatz, ansatz_circuit
from latentqde.sim import zero_state

compiled = pytest.importorskip("latentqde._kernels")


@pytest.mark.parametrize("n,layers", [(1, 1), (3, 7), (4, 7), (5, 2)])
def test_ansatz_backends_agree(n, layers, rng):
    thetas = rng.uniform(-np.pi, np.pi, (6, n * layers))
    a = compiled.ansatz_states(thetas, n, layers)
    b = _kernels_py.ansatz_states(thetas, n, layers)
    assert np.max(np.abs(a - b)) <= 1e-13
    ref = ansatz_circuit(Ansatz(n, layers, thetas[0])).run(zero_state(n))[0].amplitudes
    assert np.allclose(a[0], ref, atol=1e-12)


@pytest.mark.parametrize("family", ["chebyshev", "fourier"])
@pytest.mark.parametrize("n", [1, 2, 4])
def test_product_backends_agree(family, n, rng):
    d = 1 << n
    g = rng.normal(size=(5, d)) + 1j * rng.normal(size=(5, d))
    h = rng.normal(size=(5, d)) + 1j * rng.normal(size=(5, d))
    name = f"{family}_product"
    a = getattr(compiled, name)(g, h)
    b = getattr(_kernels_py, name)(g, h)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(b)))
    assert np.allclose(getattr(kernels, name)(g, h), multiply_oracle(family, n, g, h))


def test_wrappers_accept_readonly_and_noncontiguous(rng):
    t = rng.normal(size=(4, 14))[:, ::1]
    t.setflags(write=False)
    assert kernels.ansatz_states(t, 2, 7).shape == (4, 4)
    g = (rng.normal(size=(3, 8)) + 0j)[:, ::2]
    assert kernels.chebyshev_product(g, g).shape == (3, 8)


def test_pure_python_switch():
    code = "import latentqde.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={**__import__("os").environ, "LATENTQDE_PURE_PYTHON": "1"})
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND == "compiled"
