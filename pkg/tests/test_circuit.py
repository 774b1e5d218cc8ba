import math

import numpy as np
import pytest

from sqdlab.circuit import Circuit, CPhase, Phase, X, XXPlusYY, gate_census, givens_network, inverse_gates
from sqdlab.circuit import single_particle_matrix
from sqdlab.model import ParameterError
from sqdlab.utils import random_orthogonal


def test_gate_inverse():
    g = XXPlusYY(0, 1, 0.3)
    assert g.inverse() == XXPlusYY(0, 1, -0.3)
    assert X(2).inverse() == X(2)
    assert CPhase(0, 3, 0.5).inverse().phi == -0.5
    assert Phase(1, 0.2).inverse().phi == -0.2


def test_circuit_validation():
    with pytest.raises(ParameterError, match=r'even qubit count'):
        Circuit(3, ())
    with pytest.raises(ParameterError, match=r'outside'):
        Circuit(4, (X(4),))
    with pytest.raises(ParameterError, match=r'repeats a qubit'):
        Circuit(4, (CPhase(1, 1, 0.1),))


def test_circuit_text():
    c = Circuit(4, (X(0), X(2), XXPlusYY(0, 1, 0.25), Phase(3, -1.5), CPhase(1, 2, 0.125)))
    assert c.n_orb == 2
    assert len(c) == 5
    assert c.preparation() == (X(0), X(2))
    loaded = Circuit.from_text(c.to_text())
    assert loaded == c

    with pytest.raises(ValueError, match=r'line 2'):
        Circuit.from_text('QUBITS 4\nSWAP 0 1\n')
    with pytest.raises(ValueError, match=r'no QUBITS header'):
        Circuit.from_text('X 0\n')


def test_census():
    prep = Circuit(4, (X(0), X(2)))
    census = gate_census(prep)
    assert census.n_two_qubit == 0
    assert census.n_x == 2

    c = Circuit(4, (XXPlusYY(0, 1, 0.1), XXPlusYY(2, 3, 0.1), CPhase(0, 1, 0.2), CPhase(0, 2, 0.2),
                    CPhase(1, 3, 0.2), Phase(0, 0.1)))
    census = gate_census(c)
    assert (census.n_xxpyy, census.n_cp_same, census.n_cp_opp, census.n_phase) == (2, 1, 2, 1)
    assert census.n_two_qubit == 5
    assert census.to_dict()['n_two_qubit'] == 5


@pytest.mark.parametrize('order', ['columns', 'rows'])
@pytest.mark.parametrize('n', [2, 3, 5, 8])
def test_givens_network_reproduces_rotation(order, n):
    U = random_orthogonal(n, seed=n)
    gates = givens_network(U, offset=n, order=order)
    assert all(q >= n for g in gates for q in g.qubits())
    assert np.max(np.abs(single_particle_matrix(gates, n, offset=n) - U)) < 1e-10
    assert np.max(np.abs(single_particle_matrix(inverse_gates(gates), n, offset=n) - U.T)) < 1e-10


def test_givens_network_gate_count():
    n = 6
    gates = givens_network(random_orthogonal(n, seed=1))
    assert sum(isinstance(g, XXPlusYY) for g in gates) == n * (n - 1) // 2
    assert all(abs(g.q2 - g.q1) == 1 for g in gates if isinstance(g, XXPlusYY))


def test_givens_two_orbitals():
    theta = 0.4
    U = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    gates = givens_network(U)
    assert len(gates) == 1
    assert gates[0].theta == pytest.approx(2 * theta)
    assert givens_network(np.eye(3)) == []


def test_givens_network_errors():
    with pytest.raises(ParameterError, match=r'orthogonal'):
        givens_network(2 * np.eye(2))
    with pytest.raises(ParameterError, match=r'real orthogonal'):
        givens_network(1j * np.eye(2))
    with pytest.raises(ParameterError, match=r'unknown Givens order'):
        givens_network(np.eye(2), order='diagonal')
    with pytest.raises(ParameterError, match=r'not a one-body gate'):
        single_particle_matrix([CPhase(0, 1, 0.1)], 2)
