import numpy as np
import pytest

from sqdlab.determinant import Determinant, DeterminantBasis, ResourceGuardError, SectorError, SectorSpace


def test_determinant():
    d = Determinant(0b0111, 0b1011)
    assert d.n_up() == 3 and d.n_down() == 3
    assert d.is_valid(3, 3)
    assert not d.is_valid(2, 3)
    assert d.occupations(4) == ([0, 1, 2], [0, 1, 3])
    assert d.to_int(4) == 0b1011_0111
    assert d.to_bitstring(4) == '10110111'
    assert Determinant.from_int(0b1011_0111, 4) == d
    assert d.excitation_degree(Determinant(0b0111, 0b0111)) == 1
    assert d.excitation_degree(Determinant(0b1110, 0b1110)) == 2

    assert Determinant.reference(4, 3, 2) == Determinant(0b0111, 0b0011)
    with pytest.raises(SectorError):
        Determinant.reference(4, 5, 2)


def test_sector_space():
    space = SectorSpace(4, 3, 3)
    assert space.shape == (4, 4)
    assert space.dimension == 16
    assert space.positions(np.array([0b0111]), np.array([0b1011])).tolist() == [1]
    assert space.positions(np.array([0b0011]), np.array([0b0111])).tolist() == [-1]
    full = space.basis()
    assert len(full) == 16
    assert full[1] == Determinant(0b0111, 0b1011)
    assert SectorSpace(12, 9, 9).dimension == 48400

    with pytest.raises(SectorError, match=r'at most 31'):
        SectorSpace(32, 1, 1)


def test_basis_validation():
    with pytest.raises(SectorError, match=r'not in the \(3, 3\) sector'):
        DeterminantBasis(4, 3, 3, [0b0111, 0b0011], [0b0111, 0b0111])
    with pytest.raises(ValueError, match=r'duplicates'):
        DeterminantBasis(4, 3, 3, [0b0111, 0b0111], [0b0111, 0b0111])
    with pytest.raises(ValueError, match=r'equal length'):
        DeterminantBasis(4, 3, 3, [0b0111], [])


def test_basis_lookup_and_extend():
    basis = DeterminantBasis(4, 3, 3, [0b1110, 0b0111], [0b0111, 0b0111])
    assert basis.index(Determinant(0b0111, 0b0111)) == 1
    assert Determinant(0b1011, 0b0111) not in basis
    assert list(basis) == [Determinant(0b1110, 0b0111), Determinant(0b0111, 0b0111)]

    extended = basis.extend([0b0111, 0b1011, 0b1011], [0b0111, 0b0111, 0b0111])
    assert len(extended) == 3
    assert extended[2] == Determinant(0b1011, 0b0111)
    # existing positions are kept
    assert extended.index(Determinant(0b1110, 0b0111)) == 0
    assert basis.same_sector(extended)

    unique = DeterminantBasis.unique(4, 3, 3, [0b1011, 0b0111, 0b1011], [0b0111] * 3)
    assert unique.alpha.tolist() == [0b1011, 0b0111]


def test_basis_text():
    basis = DeterminantBasis(4, 3, 3, [0b1110, 0b0111], [0b0111, 0b1011])
    text = basis.to_text()
    assert text == '7,b\ne,7\n'
    loaded = DeterminantBasis.from_text(text, 4, 3, 3)
    assert set(loaded) == set(basis)
    with pytest.raises(ValueError, match=r'line 1'):
        DeterminantBasis.from_text('zz\n', 4, 3, 3)


def test_resource_guard_error():
    e = ResourceGuardError('sector', 100, 10, 'raise the limit')
    assert e.size == 100 and e.limit == 10
    assert 'raise the limit' in str(e)
    assert isinstance(e, ValueError)
