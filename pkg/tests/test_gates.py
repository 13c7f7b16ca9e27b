import itertools

import numpy as np
import pytest

from qudit_blind.galois import FieldError, make_field
from qudit_blind.gates import (
    angle_grid_size,
    clock,
    cz,
    decompose_mult,
    diag_gate,
    equal_up_to_phase,
    ge_gate,
    hadamard,
    identify_pauli_string,
    is_clifford,
    is_pauli_up_to_phase,
    mult_gate,
    pauli,
    pauli_string,
    phase,
    product,
    ring_gate,
    shift,
    t_conjugation_closed_form,
    t_gate,
)


def test_qubit_matrices():
    F = make_field(2)
    assert np.allclose(shift(1, F).matrix, [[0, 1], [1, 0]])
    assert np.allclose(clock(1, F).matrix, np.diag([1, -1]))
    assert np.allclose(hadamard(F).matrix, np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    assert np.allclose(cz(F).matrix, np.diag([1, 1, 1, -1]))


@pytest.mark.parametrize("p", [3, 5, 7])
def test_prime_hadamard_is_dft(p):
    F = make_field(p)
    w = np.exp(2j * np.pi / p)
    dft = np.array([[w ** (j * k) for k in range(p)] for j in range(p)]) / np.sqrt(p)
    assert np.allclose(hadamard(F).matrix, dft)


def test_weyl_commutation(small_field):
    F = small_field
    for x, z in itertools.product(range(F.d), repeat=2):
        X, Z = shift(x, F).matrix, clock(z, F).matrix
        ph = np.exp(2j * np.pi * F.trace_table[F.mul_table[x, z]] / F.p)
        assert np.allclose(Z @ X, ph * X @ Z)


def test_shift_and_clock_act_on_basis(small_field):
    F = small_field
    for x in range(F.d):
        X = shift(x, F).matrix
        for k in range(F.d):
            e = np.zeros(F.d)
            e[k] = 1
            assert np.argmax(np.abs(X @ e)) == F.add_table[k, x]


def test_paulis_pairwise_orthogonal(small_field):
    F = small_field
    mats = [pauli(x, z, F).matrix for x, z in itertools.product(range(F.d), repeat=2)]
    gram = np.array([[np.trace(a.conj().T @ b) for b in mats] for a in mats])
    assert np.allclose(gram, F.d * np.eye(len(mats)))


def test_all_generators_unitary(small_field):
    F = small_field
    gates = [hadamard(F), cz(F), t_gate(F), ge_gate(1, F)]
    gates += [mult_gate(l, F) for l in range(1, F.d)] + [phase(l, F) for l in range(1, F.d)]
    assert all(g.is_unitary() for g in gates)


def test_multiplication_decomposition(small_field):
    F = small_field
    for lam in range(1, F.d):
        assert equal_up_to_phase(product(decompose_mult(lam, F)).matrix, mult_gate(lam, F).matrix, 1e-10)


def test_m_zero_rejected():
    with pytest.raises(FieldError):
        mult_gate(0, make_field(3))
    with pytest.raises(FieldError):
        shift(3, make_field(3))


def test_clifford_detection(small_field):
    F = small_field
    assert is_clifford(hadamard(F), F, 1)
    assert is_clifford(phase(1, F), F, 1)
    assert is_clifford(cz(F), F, 2)
    assert not is_clifford(t_gate(F), F, 1)


def test_pauli_identification():
    F = make_field(3)
    P = pauli_string([1, 0], [2, 1], F).matrix * np.exp(0.3j)
    xs, zs, _ = identify_pauli_string(P, F, 2)
    assert list(xs) == [1, 0] and list(zs) == [2, 1]
    assert identify_pauli_string(np.kron(t_gate(F).matrix, np.eye(3)), F, 2) is None


def test_equal_up_to_phase():
    A = hadamard(make_field(5)).matrix
    assert equal_up_to_phase(A, np.exp(1.1j) * A)
    assert not equal_up_to_phase(A, A @ np.diag(np.exp(1j * np.arange(5))))


def test_angle_grid_sizes():
    assert [angle_grid_size(make_field(*pm)) for pm in [(2, 1), (2, 3), (3, 2), (5, 1), (7, 1)]] == [8, 8, 9, 5, 7]


def test_t_is_non_clifford_but_closed_form_odd():
    F = make_field(5)
    T = t_gate(F).matrix
    for x in range(1, 5):
        G = T @ shift(x, F).matrix @ T.conj().T
        assert is_pauli_up_to_phase(G, F) is None
        assert equal_up_to_phase(G, t_conjugation_closed_form(x, F).matrix, 1e-10)


def test_diag_gate():
    g = diag_gate([0, np.pi / 2])
    assert np.allclose(g.matrix, np.diag([1, 1j]))


def test_z6_ring_qudit_is_not_a_field_but_has_cliffords():
    X, Z, H = (ring_gate(n, 6).matrix for n in "XZH")
    w = np.exp(2j * np.pi / 6)
    assert np.allclose(Z @ X, w * X @ Z)
    assert np.allclose(H @ X @ H.conj().T, Z)
