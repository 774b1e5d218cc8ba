import numpy as np
import pytest

from sqdlab.constants import SampleOrigin
from sqdlab.determinant import SectorError
from sqdlab.sample_set import SampleSet


def test_sample_set_counts():
    s = SampleSet({0b0101: 3, 0b1010: 1, 0b0110: 0}, 4)
    assert len(s) == 2
    assert s.total_shots == 4
    assert s.n_orb == 2
    assert s.origin is SampleOrigin.SIMULATED
    keys, probs = s.distribution()
    assert keys.tolist() == [0b0101, 0b1010]
    assert probs.tolist() == [0.75, 0.25]
    alpha, beta, counts = s.registers()
    assert alpha.tolist() == [0b01, 0b10]
    assert beta.tolist() == [0b01, 0b10]

    with pytest.raises(ValueError, match=r'does not fit 4 qubits'):
        SampleSet({16: 1}, 4)
    with pytest.raises(ValueError, match=r'negative count'):
        SampleSet({1: -1}, 4)


def test_from_arrays_merges_duplicates():
    s = SampleSet.from_arrays(np.array([3, 1, 3]), np.array([1, 2, 5]), 4, SampleOrigin.NOISY)
    assert s.counts == {1: 2, 3: 6}
    assert s.origin is SampleOrigin.NOISY


def test_csv():
    s = SampleSet({0b0101: 3, 0b1010: 1}, 4)
    text = s.to_csv()
    assert text == 'bitstring,count\n0101,3\n1010,1\n'
    loaded = SampleSet.from_csv(text)
    assert loaded.counts == s.counts
    assert loaded.n_qubits == 4
    assert loaded.origin is SampleOrigin.EXTERNAL

    with pytest.raises(ValueError, match=r'expected header'):
        SampleSet.from_csv('bits,n\n0101,1\n')
    with pytest.raises(ValueError, match=r'line 3'):
        SampleSet.from_csv('bitstring,count\n0101,1\n101,1\n')
    with pytest.raises(ValueError, match=r'no rows'):
        SampleSet.from_csv('bitstring,count\n')
    assert SampleSet.from_csv('bitstring,count\n', n_qubits=4).total_shots == 0


def test_sector_basis():
    s = SampleSet({0b0101: 3, 0b1001: 2}, 4)
    assert s.in_sector(1, 1).tolist() == [True, True]
    basis = s.basis(1, 1)
    assert len(basis) == 2
    with pytest.raises(SectorError, match=r'outside the \(1, 1\) sector'):
        SampleSet({0b0111: 1}, 4).basis(1, 1)
