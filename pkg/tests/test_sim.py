import numpy as np
import pytest
from hypothesis import given, strategies as st

from latentqde.errors import ConfigurationError, DegenerateError, UsageError
from latentqde.sim import (
    CNOT, CPhase, Circuit, DenseOperator, H, Phase, RY, RZ, S, Sdg, Statevector, X,
    apply_dense, apply_gate, basis_state, dft_matrix, inner_product, project, qft_circuit,
    sample, state_preparation, tensor, zero_state,
)

from conftest import random_state

R2 = 1 / np.sqrt(2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_zero_state(n):
    s = zero_state(n)
    assert np.array_equal(s.amplitudes, np.eye(1, 1 << n, 0).ravel())
    assert s.is_normalized


@pytest.mark.parametrize("n", [0, 15])
def test_zero_state_range(n):
    with pytest.raises(ConfigurationError):
        zero_state(n)


def test_statevector_is_read_only():
    s = zero_state(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 2


def test_basic_gates():
    assert np.allclose(apply_gate(zero_state(1), H(0)).amplitudes, [R2, R2])
    # CNOT(0, 1) on |10> (qubit 0 set, i.e. index 1) gives |11>
    s = apply_gate(basis_state(2, 0b01), CNOT(0, 1))
    assert np.allclose(s.amplitudes, basis_state(2, 0b11).amplitudes)
    s = apply_gate(zero_state(1), RY(0, np.pi))
    assert np.allclose(np.abs(s.amplitudes), [0, 1])


def test_gate_dagger_roundtrip(rng):
    n = 3
    psi = Statevector.from_vector(random_state(rng, n))
    gates = [H(1), X(2), RY(0, 0.3), RZ(1, -1.1), S(2), Sdg(0), Phase(1, 0.7), CNOT(2, 0),
             CPhase(0, 2, 0.4), RY(1, 0.9).with_control(0, 0)]
    for g in gates:
        out = apply_gate(apply_gate(psi, g), g.dagger())
        assert np.allclose(out.amplitudes, psi.amplitudes, atol=1e-12)
        assert abs(apply_gate(psi, g).norm() - 1) < 1e-12


def test_gate_index_collision():
    with pytest.raises(UsageError):
        apply_gate(zero_state(2), CNOT(1, 1))


def test_apply_dense():
    psi = Statevector.from_vector([0.6, 0.8])
    assert np.allclose(apply_dense(psi, DenseOperator(np.eye(2))).amplitudes, psi.amplitudes)
    z = apply_dense(psi, DenseOperator(np.zeros((2, 2))))
    assert np.allclose(z.amplitudes, 0) and not z.is_normalized
    d = apply_dense(psi, DenseOperator(np.diag([2.0, 0.0])))
    assert np.allclose(d.amplitudes, [1.2, 0])
    with pytest.raises(UsageError):
        apply_dense(psi, DenseOperator(np.eye(4)))


def test_tensor_ordering(rng):
    assert np.allclose(tensor(basis_state(1, 0), basis_state(1, 1)).amplitudes, [0, 1, 0, 0])
    plus = Statevector.from_vector([R2, R2])
    assert np.allclose(tensor(plus, zero_state(1)).amplitudes, [R2, 0, R2, 0])
    a = Statevector.from_vector(2 * random_state(rng, 2))
    b = Statevector.from_vector(0.5 * random_state(rng, 1))
    assert np.isclose(tensor(a, b).norm(), a.norm() * b.norm())
    with pytest.raises(ConfigurationError):
        tensor(zero_state(8), zero_state(7))


def test_project():
    s, p = project(zero_state(2), [0], 0)
    assert p == pytest.approx(1) and np.allclose(s.amplitudes, zero_state(2).amplitudes)
    s, p = project(Statevector.from_vector([R2, R2]), [0], 0)
    assert p == pytest.approx(0.5) and np.allclose(s.amplitudes, [1, 0])
    bell = Statevector.from_vector([R2, 0, 0, R2])
    s, p = project(bell, [1], 1)
    assert p == pytest.approx(0.5) and np.allclose(s.amplitudes, [0, 0, 0, 1])
    with pytest.raises(DegenerateError):
        project(zero_state(1), [0], 1)


def test_project_probabilities_sum(rng):
    psi = Statevector.from_vector(random_state(rng, 3))
    tot = 0.0
    for o in range(4):
        try:
            tot += project(psi, [0, 2], ((o >> 0) & 1, (o >> 1) & 1))[1]
        except DegenerateError:
            pass
    assert tot == pytest.approx(1, abs=1e-12)


def test_inner_product():
    plus = Statevector.from_vector([R2, R2])
    assert inner_product(plus, plus) == pytest.approx(1)
    assert inner_product(basis_state(1, 0), basis_state(1, 1)) == 0
    assert inner_product(plus, zero_state(1)) == pytest.approx(R2)
    with pytest.raises(UsageError):
        inner_product(zero_state(1), zero_state(2))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_qft_matches_dft(n):
    m = qft_circuit(n).matrix()
    assert np.max(np.abs(m.conj().T @ m - np.eye(1 << n))) < 1e-12
    assert np.max(np.abs(m - dft_matrix(n))) < 1e-12
    assert np.max(np.abs(qft_circuit(n, inverse=True).matrix() @ m - np.eye(1 << n))) < 1e-12


def test_qft_examples():
    assert np.allclose(qft_circuit(1).run(zero_state(1))[0].amplitudes, [R2, R2])
    assert np.allclose(qft_circuit(2).run(zero_state(2))[0].amplitudes, [0.5] * 4)


def test_sample():
    assert sample(zero_state(1), 100, seed=1) == {0: 100}
    plus = Statevector.from_vector([R2, R2])
    c = sample(plus, 10**5, seed=3)
    assert abs(c.get(0, 0) / 1e5 - 0.5) <= 5 * np.sqrt(0.25 / 1e5)
    assert sample(plus, 1000, seed=9) == sample(plus, 1000, seed=9)
    with pytest.raises(UsageError):
        sample(apply_dense(plus, DenseOperator(np.diag([2.0, 0.0]))), 10)


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_state_preparation_is_unitary_and_prepares(n, seed):
    rng = np.random.default_rng(seed)
    v = random_state(rng, n)
    op = state_preparation(v)
    assert op.is_unitary(1e-10)
    out = Circuit(n, [op]).run(zero_state(n))[0]
    assert np.allclose(out.amplitudes, v, atol=1e-12)


def test_circuit_inverse_and_control(rng):
    c = Circuit(2, [H(0), CNOT(0, 1), RY(1, 0.4)])
    m = c.matrix()
    assert np.allclose(c.inverse().matrix() @ m, np.eye(4), atol=1e-12)
    cc = c.widened(3).controlled(2).matrix()
    assert np.allclose(cc[:4, :4], np.eye(4)) and np.allclose(cc[4:, 4:], m)
