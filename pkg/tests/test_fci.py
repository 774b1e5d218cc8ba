import numpy as np
import pytest

from sqdlab.determinant import SectorSpace
from sqdlab.fci import SectorHamiltonian, excitation_operators
from sqdlab.fermion import hamiltonian_matrix, sector_indices
from sqdlab.kernels import diagonal_elements
from sqdlab.model import ChainSpec, Hamiltonian, extend_to_chain, rotate_integrals, surrogate_dimer
from sqdlab.model import surrogate_params
from sqdlab.sci import slater_condon
from sqdlab.utils import random_orthogonal, strings


@pytest.fixture(scope='module')
def chain2():
    H = extend_to_chain(surrogate_dimer(surrogate_params('default')), ChainSpec(2))
    # a generic rotation fills every integral class
    return rotate_integrals(H, random_orthogonal(4, seed=3))


def _oracle(H: Hamiltonian, n_up: int, n_down: int) -> np.ndarray:
    idx = sector_indices(H.n_orb, n_up, n_down)
    return hamiltonian_matrix(H)[idx][:, idx].toarray()


def test_excitation_operators():
    table = strings(3, 1)
    E = excitation_operators(table, 3)
    # a+_2 a_0 moves the electron of string 0b001 to 0b100
    assert E[2 * 3 + 0][2, 0] == 1.0
    assert E[1 * 3 + 1].diagonal().tolist() == [0.0, 1.0, 0.0]


@pytest.mark.parametrize('n_up, n_down', [(3, 3), (2, 1), (0, 2)])
def test_sector_hamiltonian_matches_fock_space(chain2, n_up, n_down):
    H = Hamiltonian(chain2.h, chain2.V, 1.5)
    sector = SectorHamiltonian(H, n_up, n_down)
    expected = _oracle(H, n_up, n_down)
    dense = sector.dense()
    assert np.max(np.abs(dense - expected)) < 1e-10
    assert np.allclose(sector.diagonal(), np.diag(expected), atol=1e-10)


def test_slater_condon_matches_fock_space(chain2):
    space = SectorSpace(4, 3, 2)
    dets = space.basis()
    expected = _oracle(chain2, 3, 2)
    built = np.array([[slater_condon(di, dj, chain2) for dj in dets] for di in dets])
    assert np.max(np.abs(built - expected)) < 1e-10
    diag = diagonal_elements(space.basis().alpha, space.basis().beta, chain2.h, chain2.V, 4)
    assert np.allclose(diag, np.diag(expected), atol=1e-10)
