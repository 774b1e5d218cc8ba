import logging
from typing import Tuple, Union

import numpy as np

from .constants import SampleOrigin
from .model import ParameterError
from .sample_set import SampleSet
from .statevector import SectorState
from .utils import popcount_array

logger = logging.getLogger(__name__)

_PROBABILITY_SLACK = 1e-9

Seed = Union[int, np.random.Generator, None]


def sample_distribution(keys: np.ndarray, probabilities: np.ndarray, shots: int, seed: Seed,
                        n_qubits: int, origin: SampleOrigin = SampleOrigin.SIMULATED) -> SampleSet:
    """Draw ``shots`` i.i.d. outcomes from a distribution over qubit-register keys."""
    if shots < 1:
        raise ParameterError(f'shots must be positive, got {shots}')
    p = np.clip(np.asarray(probabilities, dtype=np.float64), 0.0, None)
    if p.sum() <= 0:
        raise ParameterError('cannot sample from a distribution with zero total weight')
    counts = np.random.default_rng(seed).multinomial(int(shots), p / p.sum())
    nonzero = counts > 0
    return SampleSet(dict(zip(np.asarray(keys)[nonzero].tolist(), counts[nonzero].tolist())), n_qubits, origin)


def sample(state: SectorState, shots: int, seed: Seed) -> SampleSet:
    """Measure every qubit of ``state`` ``shots`` times."""
    s = sample_distribution(state.keys(), state.probabilities(), shots, seed, 2 * state.space.n_orb)
    logger.debug('sampled %d shots: %d unique bitstrings', shots, len(s))
    return s


def _check_distribution(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if (p < 0).any() or p.sum() > 1.0 + _PROBABILITY_SLACK:
        raise ParameterError('probabilities must be non-negative and sum to at most 1')
    return p


def _miss(p: np.ndarray, shots) -> np.ndarray:
    """(1 - p_i)^S, broadcast over a leading shots axis."""
    S = np.asarray(shots, dtype=np.float64)
    return np.power(np.clip(1.0 - p, 0.0, 1.0), S[..., None])


def expected_unique(dist: np.ndarray, shots: Union[int, float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Expected number of distinct outcomes in ``shots`` draws: sum_i 1 - (1 - p_i)^S.
    """
    p = _check_distribution(dist)
    value = np.sum(1.0 - _miss(p, shots), axis=-1)
    return float(value) if value.ndim == 0 else value


def expected_missing_fraction(weights: np.ndarray, dist: np.ndarray,
                              shots: Union[int, float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Expected ground-state weight outside an S-shot sample: sum_i w_i (1 - p_i)^S.
    """
    p = _check_distribution(dist)
    w = _check_distribution(weights)
    if w.shape != p.shape:
        raise ParameterError(f'weights {w.shape} and distribution {p.shape} must align')
    value = np.sum(w * _miss(p, shots), axis=-1)
    return float(value) if value.ndim == 0 else value


def electron_number_histogram(s: SampleSet, n_orb: int = None) -> Tuple[np.ndarray, np.ndarray]:
    """Shot counts per alpha and per beta electron number, each indexed 0 .. n_orb."""
    n_orb = s.n_orb if n_orb is None else n_orb
    alpha, beta, counts = s.registers()
    return (np.bincount(popcount_array(alpha), weights=counts, minlength=n_orb + 1).astype(np.int64),
            np.bincount(popcount_array(beta), weights=counts, minlength=n_orb + 1).astype(np.int64))
