import numpy as np
import pytest

from sqdlab.constants import Mitigation
from sqdlab.determinant import SectorSpace
from sqdlab.mitigators import ConfigurationRecovery, NoMitigation, OccupancyStats, PostSelection
from sqdlab.mitigators import default_mitigator, mitigator_for, occupancy_stats, postselect, recover
from sqdlab.model import ParameterError
from sqdlab.noise_models import calibrate_bit_flip
from sqdlab.sample_set import SampleSet
from sqdlab.sampling import sample_distribution
from sqdlab.statevector import SectorState


def test_postselect():
    s = SampleSet({0b0101: 3, 0b0111: 2, 0b1010: 1}, 4)
    kept = postselect(s, 1, 1)
    assert kept.counts == {0b0101: 3, 0b1010: 1}
    assert PostSelection().mitigate(s, 1, 1).counts == kept.counts
    assert NoMitigation().mitigate(s, 1, 1) is s


def test_occupancy_stats():
    s = SampleSet({0b0001: 3, 0b0011: 1}, 4)
    assert occupancy_stats(s).mean_occ.tolist() == [1.0, 0.25, 0.0, 0.0]
    with pytest.raises(ValueError, match=r'empty sample set'):
        occupancy_stats(SampleSet({}, 4))
    with pytest.raises(ParameterError, match=r'\[0, 1\]'):
        OccupancyStats(np.array([1.5]))


def test_recover_removes_least_likely_electron():
    stats = OccupancyStats(np.array([0.9, 0.2, 0.5, 0.5]))
    s = SampleSet({0b01_11: 1}, 4)
    assert recover(s, 1, 1, stats).counts == {0b01_01: 1}


def test_recover_adds_most_likely_electron():
    stats = OccupancyStats(np.array([0.3, 0.8, 0.6, 0.1]))
    s = SampleSet({0b00_00: 2}, 4)
    assert recover(s, 1, 1, stats).counts == {0b01_10: 2}


def test_recover_ties_take_lowest_index():
    stats = OccupancyStats(np.full(4, 0.5))
    assert recover(SampleSet({0b01_00: 1}, 4), 1, 1, stats).counts == {0b01_01: 1}


def test_recover_uses_means_of_all_shots():
    # valid shots alone would put the missing electron in orbital 0
    s = SampleSet({0b000_001: 1, 0b000_110: 3, 0b000_000: 1}, 6)
    assert recover(s, 1, 0).counts == {0b000_001: 1, 0b000_100: 3, 0b000_010: 1}


def test_recover_keeps_valid_shots():
    s = SampleSet({0b0101: 4, 0b1010: 1, 0b1111: 2}, 4)
    out = recover(s, 1, 1)
    assert out.total_shots == 7
    assert out.counts[0b0101] >= 4
    assert out.counts[0b1010] >= 1
    assert out.in_sector(1, 1).all()


def test_recover_errors():
    s = SampleSet({0b0101: 1}, 4)
    with pytest.raises(ParameterError, match=r'cannot place'):
        recover(s, 3, 1)
    with pytest.raises(ParameterError, match=r'rounds must be positive'):
        recover(s, 1, 1, rounds=0)
    with pytest.raises(ParameterError, match=r'cover 2 qubits'):
        recover(s, 1, 1, OccupancyStats(np.array([0.5, 0.5])))


def test_randomized_recovery():
    rng = np.random.default_rng(3)
    keys = rng.integers(0, 1 << 8, size=200)
    s = SampleSet.from_arrays(keys, np.ones(200, dtype=np.int64), 8)
    for out in (recover(s, 3, 3, seed=1, randomized=True), recover(s, 3, 3, seed=1, rounds=3)):
        assert out.total_shots == 200
        assert out.in_sector(3, 3).all()
    assert recover(s, 3, 3, seed=1, randomized=True).counts == recover(s, 3, 3, seed=1, randomized=True).counts


def test_recovery_beats_postselection():
    space = SectorSpace(12, 9, 9)
    rng = np.random.default_rng(8)
    probs = rng.exponential(size=space.dimension) ** 4
    state_keys = SectorState(space, np.sqrt(probs / probs.sum())).keys()
    clean = sample_distribution(state_keys, probs, 7000, rng, 24)
    noisy = calibrate_bit_flip(0.35, 12, 9, 9).apply(clean, seed=5)

    kept = postselect(noisy, 9, 9)
    recovered = recover(noisy, 9, 9)
    assert 0.3 < kept.total_shots / 7000 < 0.4
    assert recovered.total_shots == 7000
    assert len(recovered.basis(9, 9)) > len(kept.basis(9, 9))


def test_mitigator_for():
    assert isinstance(mitigator_for('none'), NoMitigation)
    assert isinstance(mitigator_for(Mitigation.POSTSELECT), PostSelection)
    assert isinstance(mitigator_for('recover', seed=3), ConfigurationRecovery)
    assert isinstance(default_mitigator(), ConfigurationRecovery)
    with pytest.raises(ValueError):
        mitigator_for('majority')
