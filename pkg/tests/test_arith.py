import numpy as np
import pytest
from hypothesis import given, strategies as st

from latentqde.arith import (
    apply_multiplier, build_adder, build_coeff_correction, build_mod, build_subtractor,
    evaluate_coefficients, load_function, multiplier_layout, multiplier_matrix,
    multiply_mixtures, multiply_oracle,
)
from latentqde.encodings import chebyshev_T, make_encoding
from latentqde.errors import ConfigurationError, DegenerateError
from latentqde.mixture import MixtureState
from latentqde.sim import Statevector, basis_state

from conftest import random_state


def _register_value(state, qubits):
    idx = int(np.argmax(np.abs(state.amplitudes)))
    assert abs(abs(state.amplitudes[idx]) - 1) < 1e-10
    return sum(((idx >> q) & 1) << i for i, q in enumerate(qubits))


def _input_index(n, j, k):
    lay = multiplier_layout(n)
    return (j << lay["g"][0]) | (k << lay["h"][0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_adder_subtractor_mod_exhaustive(n):
    lay = multiplier_layout(n)
    add, sub = build_adder(n), build_subtractor(n)
    mod = build_subtractor(n) + build_mod(n, 3 * n + 1)
    for j in range(1 << n):
        for k in range(1 << n):
            s = basis_state(3 * n + 1, _input_index(n, j, k))
            out = add.run(s)[0]
            assert _register_value(out, lay["result"]) == j + k
            assert _register_value(out, lay["g"]) == j and _register_value(out, lay["h"]) == k
            assert _register_value(sub.run(s)[0], lay["result"]) == (j - k) % (1 << (n + 1))
            r = mod.run(s)[0]
            assert _register_value(r, lay["result"][:-1]) == abs(j - k)
            assert _register_value(r, lay["result"][-1:]) == int(j < k)


def test_adder_examples():
    n = 2
    lay = multiplier_layout(n)
    out = build_adder(n).run(basis_state(7, _input_index(n, 1, 2)))[0]
    assert _register_value(out, lay["result"]) == 3
    out = build_adder(n).run(basis_state(7, _input_index(n, 3, 3)))[0]
    assert _register_value(out, lay["result"]) == 6
    out = build_subtractor(1).run(basis_state(4, _input_index(1, 0, 1)))[0]
    assert _register_value(out, multiplier_layout(1)["result"]) == 3


def test_mod_examples():
    # n = 1: register holds 3 (= -1 mod 4) -> low bit |1>; 1 stays 1
    assert _register_value(build_mod(1).run(basis_state(2, 3))[0], [0]) == 1
    assert _register_value(build_mod(2).run(basis_state(3, 1))[0], [0, 1]) == 1


def test_coeff_correction_factors():
    n = 1
    lay = multiplier_layout(n)
    c = build_coeff_correction(n)
    cases = {(1, 1, 2): 1.0, (0, 1, 1): 1 / np.sqrt(2), (0, 0, 0): 1 / np.sqrt(2)}
    ref = None
    for (j, k, r), rel in cases.items():
        idx = (j << lay["g"][0]) | (k << lay["h"][0]) | r
        out, p = c.run(basis_state(3 * n + 4, idx))
        amp = np.sqrt(p)
        ref = amp if ref is None else ref
        assert amp / ref == pytest.approx(rel, abs=1e-12)


@pytest.mark.parametrize("family", ["chebyshev", "fourier"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_gate_level_equals_oracle(family, n):
    rng = np.random.default_rng(10 * n + len(family))
    worst = 0.0
    for _ in range(100):
        g = random_state(rng, n, real=family == "chebyshev")
        h = random_state(rng, n, real=family == "chebyshev")
        res = apply_multiplier(family, Statevector.from_vector(g), Statevector.from_vector(h))
        worst = max(worst, np.max(np.abs(res.coefficients() - multiply_oracle(family, n, g, h))))
        assert np.allclose(res.branches.vector(), res.coefficients(), atol=1e-12)
    assert worst <= 1e-10


def test_fourier_oracle_delta():
    g, h = np.eye(4)[1], np.eye(4)[2]
    out = multiply_oracle("fourier", 2, g, h)
    assert np.count_nonzero(np.abs(out) > 1e-14) == 1 and abs(out[3]) > 0


def test_chebyshev_x_squared():
    enc = make_encoding("chebyshev", 2)
    t1 = enc.load_values(enc.nodes())
    prod = multiply_oracle("chebyshev", 2, t1, t1)
    x = np.random.default_rng(1).uniform(-1, 1, 20)
    assert np.allclose(enc.product_basis().evaluate(prod, x), x**2, atol=1e-10)


@pytest.mark.parametrize("family", ["chebyshev", "fourier"])
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 3))
def test_oracle_algebra(family, seed, n):
    rng = np.random.default_rng(seed)
    g, h = random_state(rng, n), random_state(rng, n)
    a = complex(*rng.normal(size=2))
    assert np.allclose(multiply_oracle(family, n, a * g, h), a * multiply_oracle(family, n, g, h))
    assert np.allclose(multiply_oracle(family, n, g, h), multiply_oracle(family, n, h, g))
    M = multiplier_matrix(family, n)
    assert np.allclose(M @ np.kron(g, h), multiply_oracle(family, n, g, h))
    enc = make_encoding(family, n)
    xs = rng.uniform(*enc.domain, 20) if family == "fourier" else rng.uniform(-1, 1, 20)
    prod = enc.product_basis().evaluate(multiply_oracle(family, n, g, h), xs)
    assert np.allclose(prod, enc.evaluate(g, xs) * enc.evaluate(h, xs), atol=1e-8)
    unity = multiply_oracle(family, n, enc.unity(), g)
    assert np.allclose(enc.product_basis().evaluate(unity, xs), enc.evaluate(g, xs), atol=1e-10)


@pytest.mark.parametrize("family", ["chebyshev", "fourier"])
def test_unity_times_unity(family):
    enc = make_encoding(family, 2)
    u = enc.unity()
    res = apply_multiplier(family, Statevector.from_vector(u / np.linalg.norm(u), True),
                           Statevector.from_vector(u / np.linalg.norm(u), True))
    coeffs = res.coefficients() * np.linalg.norm(u) ** 2
    xs = np.linspace(0.1, 0.9, 7)
    assert np.allclose(enc.product_basis().evaluate(coeffs, xs), 1.0, atol=1e-10)


def test_multiplier_width_cap():
    with pytest.raises(ConfigurationError):
        apply_multiplier("chebyshev", Statevector.from_vector(np.eye(16)[0]),
                         Statevector.from_vector(np.eye(16)[0]))


def test_shot_estimated_multiplier_is_close():
    rng = np.random.default_rng(3)
    g, h = random_state(rng, 2, True), random_state(rng, 2, True)
    exact = multiply_oracle("chebyshev", 2, g, h)
    est = apply_multiplier("chebyshev", Statevector.from_vector(g), Statevector.from_vector(h),
                           shots=10**6, seed=1).coefficients()
    assert np.max(np.abs(est - exact)) < 0.02


def test_multiply_mixtures_bilinear():
    rng = np.random.default_rng(4)
    a = MixtureState.from_vector(random_state(rng, 2, True), 0.5)
    a = a + MixtureState.from_vector(random_state(rng, 2, True), -1.5)
    b = MixtureState.from_vector(random_state(rng, 2, True), 2.0)
    out = multiply_mixtures("chebyshev", a, b)
    assert np.allclose(out.vector(), multiply_oracle("chebyshev", 2, a.vector(), b.vector()))


def test_load_function():
    enc = make_encoding("chebyshev", 3)
    lf = load_function("chebyshev", 3, lambda x: np.ones_like(x))
    assert np.allclose(lf.coefficients(), enc.unity())
    lf = load_function("chebyshev", 2, lambda x: chebyshev_T(2, x))
    assert np.count_nonzero(np.abs(lf.state.amplitudes) > 1e-12) == 1
    assert abs(lf.state.amplitudes[2]) == pytest.approx(1)
    g = lambda x: np.exp(-x) * (np.cos(2 * np.pi * x) + 2 * np.pi * np.sin(2 * np.pi * x))
    lf = load_function("chebyshev", 4, g)
    nodes = make_encoding("chebyshev", 4).nodes()
    assert np.max(np.abs(lf(nodes) - g(nodes))) <= 1e-10
    with pytest.raises(DegenerateError):
        load_function("chebyshev", 2, lambda x: 0 * x)
    with pytest.raises(ConfigurationError):
        load_function("chebyshev", 2, lambda x: np.where(x > 0, np.inf, 1.0))


def test_load_function_two_dims():
    encs = (make_encoding("chebyshev", 2), make_encoding("chebyshev", 3))
    lf = load_function(encs, None, lambda x, y: x * y + y**2)
    x, y = np.meshgrid(encs[0].nodes(), encs[1].nodes(), indexing="ij")
    assert np.allclose(evaluate_coefficients(encs, lf.coefficients(), x, y), x * y + y**2)
