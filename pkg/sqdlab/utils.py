from itertools import combinations
from typing import Iterable, List, Optional, Union

import numpy as np
from scipy.stats import ortho_group

from .constants import UNITARY_TOLERANCE, SYMMETRY_TOLERANCE


def popcount(value: int) -> int:
    return bin(value).count('1')


def popcount_array(values: np.ndarray) -> np.ndarray:
    """
    Vectorised popcount of non-negative int64 values.
    """
    v = np.asarray(values, dtype=np.int64).copy()
    v = v - ((v >> 1) & 0x5555555555555555)
    v = (v & 0x3333333333333333) + ((v >> 2) & 0x3333333333333333)
    v = (v + (v >> 4)) & 0x0F0F0F0F0F0F0F0F
    return ((v * 0x0101010101010101) & 0x7FFFFFFFFFFFFFFF) >> 56


def occupied(mask: int, n_orb: int) -> List[int]:
    return [i for i in range(n_orb) if (mask >> i) & 1]


def mask_of(orbitals: Iterable[int]) -> int:
    mask = 0
    for i in orbitals:
        mask |= 1 << int(i)
    return mask


def strings(n_orb: int, n_elec: int) -> np.ndarray:
    """
    All occupation bitmasks of n_elec electrons in n_orb orbitals, ascending.
    """
    if n_elec < 0 or n_elec > n_orb:
        return np.zeros(0, dtype=np.int64)
    masks = [mask_of(c) for c in combinations(range(n_orb), n_elec)]
    return np.array(sorted(masks), dtype=np.int64)


def occupation_matrix(masks: np.ndarray, n_orb: int) -> np.ndarray:
    """
    Rows are bitmasks unpacked into 0/1 occupation vectors, bit i in column i.
    """
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n_orb, dtype=np.int64)[None, :]) & 1).astype(np.float64)


def excitation_sign(mask: int, i: int, a: int) -> int:
    """
    Fermionic sign of a^dagger_a a_i acting on the ascending-ordered string ``mask``.
    """
    lo, hi = min(i, a), max(i, a)
    between = mask & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))
    return -1 if popcount(between) % 2 else 1


def to_bitstring(value: int, width: int) -> str:
    return format(value, f'0{width}b')


def from_bitstring(bits: str) -> int:
    bits = bits.strip()
    if not bits or set(bits) - {'0', '1'}:
        raise ValueError(f'invalid bitstring: {bits!r}')
    return int(bits, 2)


def is_orthogonal(matrix: np.ndarray, tol: float = UNITARY_TOLERANCE) -> bool:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0))


def is_symmetric(matrix: np.ndarray, tol: float = SYMMETRY_TOLERANCE) -> bool:
    m = np.asarray(matrix)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and float(np.max(np.abs(m - m.T), initial=0.0)) < tol


def fix_column_phases(columns: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """
    Flip column signs so the first entry with magnitude above ``tol`` is positive.
    """
    c = np.array(columns, dtype=np.float64, copy=True)
    for k in range(c.shape[1]):
        nonzero = np.flatnonzero(np.abs(c[:, k]) > tol)
        if nonzero.size and c[nonzero[0], k] < 0:
            c[:, k] *= -1
    return c


def random_orthogonal(n: int, seed: Optional[Union[int, np.random.Generator]] = None) -> np.ndarray:
    if n == 1:
        return np.ones((1, 1))
    return ortho_group.rvs(n, random_state=np.random.default_rng(seed))
