import numpy as np
import pytest

from sqdlab.utils import excitation_sign, fix_column_phases, from_bitstring, is_orthogonal, is_symmetric
from sqdlab.utils import mask_of, occupation_matrix, occupied, popcount, popcount_array, random_orthogonal
from sqdlab.utils import strings, to_bitstring


def test_popcount():
    assert popcount(0) == 0
    assert popcount(0b1011) == 3
    values = np.array([0, 1, 0b111, (1 << 40) - 1, (1 << 62) | 1], dtype=np.int64)
    assert popcount_array(values).tolist() == [0, 1, 3, 40, 2]


def test_masks():
    assert occupied(0b10110, 5) == [1, 2, 4]
    assert mask_of([1, 2, 4]) == 0b10110
    assert mask_of([]) == 0


def test_strings():
    s = strings(4, 2)
    assert s.tolist() == [0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]
    assert strings(4, 0).tolist() == [0]
    assert strings(4, 5).size == 0
    assert strings(6, 3).size == 20


def test_occupation_matrix():
    m = occupation_matrix(np.array([0b101, 0b010]), 3)
    assert m.tolist() == [[1, 0, 1], [0, 1, 0]]


def test_excitation_sign():
    # a+_3 a_0 on |0 1 2> passes orbitals 1 and 2
    assert excitation_sign(0b0111, 0, 3) == 1
    # a+_2 a_0 on |0 1> passes orbital 1
    assert excitation_sign(0b0011, 0, 2) == -1
    assert excitation_sign(0b0011, 1, 2) == 1


def test_bitstrings():
    assert to_bitstring(5, 6) == '000101'
    assert from_bitstring('000101') == 5
    with pytest.raises(ValueError, match=r'invalid bitstring'):
        from_bitstring('0102')
    with pytest.raises(ValueError):
        from_bitstring('')


def test_matrix_predicates():
    U = random_orthogonal(5, seed=3)
    assert is_orthogonal(U)
    assert not is_orthogonal(2 * U)
    assert not is_orthogonal(np.ones((2, 3)))
    assert is_symmetric(U + U.T)
    assert not is_symmetric(U - U.T + np.eye(5) * 0 + np.triu(np.ones((5, 5))))
    assert random_orthogonal(1).tolist() == [[1.0]]


def test_fix_column_phases():
    c = np.array([[0.0, -1.0], [-1.0, 0.0]])
    fixed = fix_column_phases(c)
    assert fixed.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    # leading entries below the tolerance are skipped
    c = np.array([[1e-14, 0.0], [-1.0, 1.0]])
    assert fix_column_phases(c)[1, 0] == 1.0
