import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..mitigator import Mitigator
from ..model import ParameterError
from ..sample_set import SampleSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OccupancyStats:
    """Mean occupation of every spin-orbital (qubit) over a sample set."""
    mean_occ: np.ndarray

    def __post_init__(self):
        m = np.array(self.mean_occ, dtype=np.float64, copy=True)
        if m.ndim != 1 or (m < 0).any() or (m > 1).any():
            raise ParameterError('mean occupations must be a vector of values in [0, 1]')
        m.setflags(write=False)
        object.__setattr__(self, 'mean_occ', m)


def _bits(keys: np.ndarray, n_qubits: int) -> np.ndarray:
    return ((keys[:, None] >> np.arange(n_qubits, dtype=np.int64)[None, :]) & 1).astype(np.int64)


def _keys(bits: np.ndarray) -> np.ndarray:
    return bits @ (np.int64(1) << np.arange(bits.shape[1], dtype=np.int64))


def occupancy_stats(s: SampleSet) -> OccupancyStats:
    """Per-qubit mean over every shot, wrong electron numbers included."""
    if s.total_shots < 1:
        raise ValueError('cannot compute occupancies of an empty sample set')
    keys, counts = s.arrays()
    return OccupancyStats(counts @ _bits(keys, s.n_qubits) / counts.sum())


def _rank(score: np.ndarray) -> np.ndarray:
    """Position of each entry in its row after a stable ascending sort."""
    order = np.argsort(score, axis=1, kind='stable')
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.broadcast_to(np.arange(score.shape[1]), score.shape), axis=1)
    return rank


def _greedy_register(bits: np.ndarray, mean: np.ndarray, target: int) -> np.ndarray:
    # Clearing an occupied bit changes sum_j (b_j - m_j)^2 by 2 m - 1 and setting an empty one by
    # 1 - 2 m, so the best flips are the occupied bits of lowest mean or the empty bits of highest.
    excess = bits.sum(axis=1) - target
    clear = (_rank(np.where(bits == 1, mean, np.inf)) < excess[:, None]) & (bits == 1)
    fill = (_rank(np.where(bits == 0, -mean, np.inf)) < -excess[:, None]) & (bits == 0)
    return bits - clear + fill


def _random_register(bits: np.ndarray, mean: np.ndarray, target: int, rng: np.random.Generator) -> np.ndarray:
    bits = bits.copy()
    excess = int(bits.sum()) - target
    if excess == 0:
        return bits
    state = 1 if excess > 0 else 0
    candidates = np.flatnonzero(bits == state)
    weights = np.abs(state - mean[candidates])
    p = weights / weights.sum() if weights.sum() > 0 else None
    chosen = rng.choice(candidates, size=abs(excess), replace=False, p=p)
    bits[chosen] = 1 - state
    return bits


def _recover_once(s: SampleSet, targets, stats: OccupancyStats, randomized: bool, rng) -> SampleSet:
    n = s.n_orb
    keys, counts = s.arrays()
    if randomized:
        keys = np.repeat(keys, counts)
        counts = np.ones(keys.size, dtype=np.int64)
    bits = _bits(keys, s.n_qubits)
    for offset, target in zip((0, n), targets):
        register = bits[:, offset:offset + n]
        mean = stats.mean_occ[offset:offset + n]
        if randomized:
            bits[:, offset:offset + n] = np.array([_random_register(row, mean, target, rng) for row in register])
        else:
            bits[:, offset:offset + n] = _greedy_register(register, mean, target)
    return SampleSet.from_arrays(_keys(bits), counts, s.n_qubits, s.origin)


def recover(s: SampleSet, n_up: int, n_down: int, stats: Optional[OccupancyStats] = None,
            seed=None, randomized: bool = False, rounds: int = 1) -> SampleSet:
    """
    Configuration recovery: flip bits of wrong-number shots towards the mean occupations.

    Per shot and per spin register, excess electrons are removed from the occupied orbitals with
    the lowest mean occupation and missing ones added to the empty orbitals with the highest,
    lowest index first on ties. ``randomized`` instead draws the flipped bits with probability
    proportional to |bit - mean|. With ``rounds`` > 1 the occupations are re-estimated from the
    recovered shots and the raw shots recovered again.

    :param stats: mean occupations; defaults to those of ``s``
    """
    n = s.n_orb
    if not (0 <= n_up <= n and 0 <= n_down <= n):
        raise ParameterError(f'cannot place ({n_up}, {n_down}) electrons in {n} orbitals')
    if rounds < 1:
        raise ParameterError(f'rounds must be positive, got {rounds}')
    stats = stats or occupancy_stats(s)
    if stats.mean_occ.size != s.n_qubits:
        raise ParameterError(f'occupancies cover {stats.mean_occ.size} qubits, samples {s.n_qubits}')
    rng = np.random.default_rng(seed)
    recovered = s
    for round_ in range(rounds):
        recovered = _recover_once(s, (n_up, n_down), stats, randomized, rng)
        if round_ + 1 < rounds:
            stats = occupancy_stats(recovered)
    logger.debug('recovery: %d unique bitstrings -> %d unique determinants', len(s), len(recovered))
    return recovered


class ConfigurationRecovery(Mitigator):
    def __init__(self, seed=None, randomized: bool = False, rounds: int = 1):
        self.seed = seed
        self.randomized = randomized
        self.rounds = rounds

    def mitigate(self, samples: SampleSet, n_up: int, n_down: int) -> SampleSet:
        return recover(samples, n_up, n_down, seed=self.seed, randomized=self.randomized, rounds=self.rounds)
