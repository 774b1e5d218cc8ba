import numpy as np
import pytest

from sqdlab.circuit import CPhase, Phase, X, XXPlusYY, gate_census
from sqdlab.determinant import Determinant
from sqdlab.experiment import fit_power_law
from sqdlab.fermion import sector_indices, ucj_operator
from sqdlab.model import ChainSpec, ParameterError
from sqdlab.orbitals import T2Amplitudes
from sqdlab.statevector import simulate_full, simulate_sector
from sqdlab.topology import complete_topology, empty_topology, line_topology
from sqdlab.ucj import UcjLayer, UcjParams, cp_amplitudes, cp_histogram, from_t_amplitudes, layer_gate_count
from sqdlab.ucj import prune_to_topology, reconstruct_t2, reconstruction_residuals, synthesize_circuit, t2_rank
from sqdlab.ucj import ucj_state
from sqdlab.utils import random_orthogonal


def _symmetric_t2(no: int, nv: int, rank: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    T = np.zeros((no * nv, no * nv))
    for _ in range(rank):
        v = rng.normal(size=no * nv)
        T += rng.normal() * np.outer(v, v)
    return 0.1 * T.reshape(no, nv, no, nv).transpose(0, 2, 1, 3)


def _proper_rotation(n: int, seed: int) -> np.ndarray:
    U = random_orthogonal(n, seed=seed)
    if np.linalg.det(U) < 0:
        U[:, 0] = -U[:, 0]
    return U


def _random_params(n: int, r: int, seed: int) -> UcjParams:
    rng = np.random.default_rng(seed)
    layers = []
    for k in range(r):
        A, B = rng.normal(size=(2, n, n))
        layers.append(UcjLayer(_proper_rotation(n, seed + k), 0.3 * (A + A.T), 0.3 * (B + B.T)))
    return UcjParams(n, tuple(layers), _proper_rotation(n, seed + r))


def test_zero_amplitudes_give_identity_layers():
    p = from_t_amplitudes(np.zeros((3, 3, 1, 1)), 2)
    assert p.r == 2
    for layer in p.layers:
        assert np.array_equal(layer.U, np.eye(4))
        assert not layer.J_same.any() and not layer.J_opp.any()


def test_rank_one_reconstruction_is_exact():
    t2 = _symmetric_t2(3, 1, 1, seed=2)
    assert t2_rank(t2) == 1
    p = from_t_amplitudes(T2Amplitudes(t2), 1)
    assert np.allclose(reconstruct_t2(p, 3), t2, atol=1e-12)
    layer = p.layers[0]
    assert np.array_equal(layer.J_same, layer.J_opp)


@pytest.mark.parametrize('no, nv', [(3, 1), (6, 2)])
def test_residuals_decrease_with_order(no, nv):
    t2 = _symmetric_t2(no, nv, 4, seed=no)
    residuals = reconstruction_residuals(t2, 6)
    assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))
    rank = t2_rank(t2)
    assert rank <= 4
    assert residuals[rank - 1] < 1e-10


def test_expansion_order_is_checked():
    with pytest.raises(ParameterError, match=r'positive integer'):
        from_t_amplitudes(np.zeros((3, 3, 1, 1)), 0)
    with pytest.raises(ParameterError, match=r'non-finite'):
        from_t_amplitudes(np.full((1, 1, 1, 1), np.inf), 1)


def test_prune_to_topology():
    p = _random_params(8, 2, seed=3)
    line = line_topology(8)
    pruned = prune_to_topology(p, line)
    assert not pruned.layers[0].J_same[0, 2]
    assert pruned.layers[0].J_same[0, 1] == p.layers[0].J_same[0, 1]
    assert pruned.layers[1].J_opp[4, 4] == p.layers[1].J_opp[4, 4]
    assert not pruned.layers[1].J_opp[1, 1]

    twice = prune_to_topology(pruned, line)
    for a, b in zip(twice.layers, pruned.layers):
        assert np.array_equal(a.J_same, b.J_same) and np.array_equal(a.J_opp, b.J_opp)

    same = prune_to_topology(p, complete_topology(8))
    assert np.array_equal(same.layers[0].J_same, p.layers[0].J_same)

    empty = prune_to_topology(p, empty_topology(8))
    assert not any(l.J_same.any() or l.J_opp.any() for l in empty.layers)

    with pytest.raises(ParameterError, match=r'topology covers 4'):
        prune_to_topology(p, line_topology(4))


def test_identity_params_give_preparation_only():
    n = 4
    p = UcjParams(n, (UcjLayer(np.eye(n), np.zeros((n, n)), np.zeros((n, n))),))
    c = synthesize_circuit(p, Determinant.reference(n, 3, 3))
    assert all(isinstance(g, X) for g in c.gates)
    assert len(c) == 6


def test_dense_layer_census():
    n = 4
    p = _random_params(n, 1, seed=5)
    census = gate_census(synthesize_circuit(p, Determinant.reference(n, 3, 3)))
    assert census.n_x == 6
    assert census.n_cp_same == n * (n - 1)
    assert census.n_cp_opp == n * n
    assert census.n_phase >= 2 * n
    assert census.n_two_qubit == layer_gate_count(n) + n * (n - 1)


def test_two_qubit_gates_grow_quadratically():
    points = []
    for L in (2, 4, 6):
        n = 2 * L
        p = _random_params(n, 1, seed=L)
        c = synthesize_circuit(p, Determinant.reference(n, 3 * L // 2, 3 * L // 2))
        points.append((L, gate_census(c).n_two_qubit))
    assert 2.0 <= fit_power_law(points) <= 2.4


def test_angle_epsilon_drops_small_phases():
    n = 4
    J = np.full((n, n), 1e-4)
    p = UcjParams(n, (UcjLayer(np.eye(n), J, J),))
    ref = Determinant.reference(n, 3, 3)
    assert gate_census(synthesize_circuit(p, ref)).n_cp == n * (n - 1) + n * n
    assert gate_census(synthesize_circuit(p, ref, angle_epsilon=1e-3)).n_cp == 0
    with pytest.raises(ParameterError, match=r'non-negative'):
        synthesize_circuit(p, ref, angle_epsilon=-1.0)


def test_circuit_matches_determinant_algebra():
    spec = ChainSpec(2)
    p = _random_params(4, 2, seed=7)
    ref = Determinant.reference(4, 3, 3)
    expected = ucj_state(p, spec, ref).vector
    for order in ('columns', 'rows'):
        c = synthesize_circuit(p, ref, order=order)
        assert not any(isinstance(g, XXPlusYY) and abs(g.q1 - g.q2) != 1 for g in c.gates)
        assert np.max(np.abs(simulate_sector(c, spec).vector - expected)) < 1e-10


def test_ucj_state_matches_fock_space_operator():
    spec = ChainSpec(2)
    p = prune_to_topology(_random_params(4, 1, seed=9), line_topology(4))
    ref = Determinant.reference(4, 3, 3)
    full = np.zeros(1 << 8, dtype=np.complex128)
    full[ref.to_int(4)] = 1.0
    full = ucj_operator(p) @ full
    idx = sector_indices(4, 3, 3)
    assert np.linalg.norm(full[idx]) == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(full[idx] - ucj_state(p, spec, ref).vector)) < 1e-8

    circuit = synthesize_circuit(p, ref)
    assert np.max(np.abs(simulate_full(circuit)[idx] - full[idx])) < 1e-8


def test_cp_histogram():
    n = 4
    J = np.zeros((n, n))
    J[0, 1] = J[1, 0] = 1.0
    p = UcjParams(n, (UcjLayer(np.eye(n), J, J),))
    values = cp_amplitudes(p)
    # 6 same-spin pairs per register plus 16 opposite-spin pairs
    assert values.size == 2 * 6 + 16
    hist = cp_histogram(p, bins=4)
    assert hist.n_entries == 28
    assert hist.counts.sum() == 28
    assert hist.low_fraction == pytest.approx(24 / 28)
    with pytest.raises(ParameterError, match=r'at least 2 bins'):
        cp_histogram(p, bins=1)

    pruned = prune_to_topology(p, empty_topology(n))
    assert cp_amplitudes(pruned).size == 0
    assert cp_histogram(pruned).low_fraction == 1.0


def test_params_json():
    p = prune_to_topology(_random_params(4, 2, seed=11), line_topology(4))
    loaded = UcjParams.from_json(p.to_json())
    assert loaded.r == 2
    assert np.array_equal(loaded.opp_spin_mask, p.opp_spin_mask)
    for a, b in zip(loaded.layers, p.layers):
        assert np.array_equal(a.U, b.U)
        assert np.array_equal(a.J_opp, b.J_opp)
    assert np.array_equal(loaded.final_rotation, p.final_rotation)

    with pytest.raises(ParameterError, match=r'malformed'):
        UcjParams.from_json('{"n_orb": 4}')
    with pytest.raises(ParameterError, match=r'unitary'):
        UcjLayer(2 * np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ParameterError, match=r'at least one layer'):
        UcjParams(2, ())
