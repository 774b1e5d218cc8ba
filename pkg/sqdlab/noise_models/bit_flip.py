import logging

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb

from ..constants import SampleOrigin
from ..model import ParameterError
from ..noise_model import NoiseModel
from ..sample_set import SampleSet

logger = logging.getLogger(__name__)

# Shots corrupted per vectorised block.
CHUNK_SHOTS = 1 << 16


def _register_keeps_count(p: float, n_orb: int, n_occ: int) -> float:
    # equal numbers of 1 -> 0 and 0 -> 1 flips
    k = np.arange(min(n_occ, n_orb - n_occ) + 1)
    return float(np.sum(comb(n_occ, k) * comb(n_orb - n_occ, k) * p ** (2 * k) * (1 - p) ** (n_orb - 2 * k)))


def correct_number_probability(p_flip: float, n_orb: int, n_up: int, n_down: int) -> float:
    return _register_keeps_count(p_flip, n_orb, n_up) * _register_keeps_count(p_flip, n_orb, n_down)


def error_free_fraction(p_flip: float, n_qubits: int) -> float:
    return float((1.0 - p_flip) ** n_qubits)


class BitFlipNoise(NoiseModel):
    """
    Every bit of every shot flips independently with probability ``p_flip``.
    """

    def __init__(self, p_flip: float):
        if not 0.0 <= p_flip <= 1.0:
            raise ParameterError(f'p_flip must lie in [0, 1], got {p_flip}')
        self.p_flip = float(p_flip)

    def apply(self, samples: SampleSet, seed=None) -> SampleSet:
        keys, counts = samples.arrays()
        shots = np.repeat(keys, counts)
        if self.p_flip > 0.0 and shots.size:
            rng = np.random.default_rng(seed)
            weights = np.int64(1) << np.arange(samples.n_qubits, dtype=np.int64)
            for start in range(0, shots.size, CHUNK_SHOTS):
                block = shots[start:start + CHUNK_SHOTS]
                flips = rng.random((block.size, samples.n_qubits)) < self.p_flip
                shots[start:start + CHUNK_SHOTS] = block ^ (flips.astype(np.int64) @ weights)
        noisy = SampleSet.from_arrays(shots, np.ones(shots.size, dtype=np.int64), samples.n_qubits, SampleOrigin.NOISY)
        logger.debug('bit-flip noise p=%.4f on %d shots: %d -> %d unique bitstrings',
                     self.p_flip, shots.size, len(samples), len(noisy))
        return noisy

    def correct_number_probability(self, n_orb: int, n_up: int, n_down: int) -> float:
        return correct_number_probability(self.p_flip, n_orb, n_up, n_down)

    def error_free_fraction(self, n_qubits: int) -> float:
        return error_free_fraction(self.p_flip, n_qubits)


def apply_bitflip_noise(s: SampleSet, p_flip: float, seed=None) -> SampleSet:
    return BitFlipNoise(p_flip).apply(s, seed)


def calibrate_bit_flip(target: float, n_orb: int, n_up: int, n_down: int) -> BitFlipNoise:
    """
    The bit-flip rate in [0, 1/2] at which a shot keeps the correct electron number in both
    registers with probability ``target``.
    """
    def gap(p):
        return correct_number_probability(p, n_orb, n_up, n_down) - target

    if not gap(0.0) >= 0.0 >= gap(0.5):
        raise ParameterError(f'target correct-number fraction {target} is not reachable for '
                             f'p_flip in [0, 0.5]')
    p = 0.0 if gap(0.0) == 0.0 else brentq(gap, 0.0, 0.5, xtol=1e-14)
    logger.info('calibrated p_flip=%.6f for correct-number fraction %.3f (error-free fraction %.3f)',
                p, target, error_free_fraction(p, 2 * n_orb))
    return BitFlipNoise(p)
