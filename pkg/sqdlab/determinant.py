from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, List, Optional, Tuple

import numpy as np

from .utils import occupied, popcount, popcount_array, strings, to_bitstring


class SectorError(ValueError):
    """
    A determinant, state or gate falls outside the particle-number sector in use.
    """

    def __init__(self, message: str, gate_index: Optional[int] = None):
        super().__init__(message if gate_index is None else f'gate {gate_index}: {message}')
        self.gate_index = gate_index


class ResourceGuardError(ValueError):
    """
    A requested space exceeds its configured size guard.
    """

    def __init__(self, what: str, size: int, limit: int, hint: str):
        super().__init__(f'{what} of size {size} exceeds the guard of {limit}; {hint}')
        self.size = size
        self.limit = limit


@dataclass(frozen=True, order=True)
class Determinant:
    """
    Occupation bitmasks of one Slater determinant. Bit i of ``alpha`` is qubit i and bit i
    of ``beta`` is qubit n_orb + i.
    """
    alpha: int
    beta: int

    def n_up(self) -> int:
        return popcount(self.alpha)

    def n_down(self) -> int:
        return popcount(self.beta)

    def is_valid(self, n_up: int, n_down: int) -> bool:
        return self.n_up() == n_up and self.n_down() == n_down

    def occupations(self, n_orb: int) -> Tuple[List[int], List[int]]:
        return occupied(self.alpha, n_orb), occupied(self.beta, n_orb)

    def excitation_degree(self, other: 'Determinant') -> int:
        return (popcount(self.alpha ^ other.alpha) + popcount(self.beta ^ other.beta)) // 2

    def to_int(self, n_orb: int) -> int:
        return self.alpha | (self.beta << n_orb)

    def to_bitstring(self, n_orb: int) -> str:
        return to_bitstring(self.to_int(n_orb), 2 * n_orb)

    @staticmethod
    def from_int(value: int, n_orb: int) -> 'Determinant':
        mask = (1 << n_orb) - 1
        return Determinant(value & mask, (value >> n_orb) & mask)

    @staticmethod
    def reference(n_orb: int, n_up: int, n_down: int) -> 'Determinant':
        """The aufbau determinant filling the lowest orbitals of each spin."""
        if not (0 <= n_up <= n_orb and 0 <= n_down <= n_orb):
            raise SectorError(f'cannot place ({n_up}, {n_down}) electrons in {n_orb} orbitals')
        return Determinant((1 << n_up) - 1, (1 << n_down) - 1)


def _keys(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return (np.asarray(alpha, dtype=np.int64) << 32) | np.asarray(beta, dtype=np.int64)


class SectorSpace:
    """
    The complete (n_up, n_down) sector: sorted alpha and beta strings with the
    amplitude layout psi[alpha_index, beta_index], beta varying fastest.
    """

    def __init__(self, n_orb: int, n_up: int, n_down: int):
        if n_orb > 31:
            raise SectorError(f'at most 31 spatial orbitals are supported, got {n_orb}')
        if not (0 <= n_up <= n_orb and 0 <= n_down <= n_orb):
            raise SectorError(f'cannot place ({n_up}, {n_down}) electrons in {n_orb} orbitals')
        self.n_orb = n_orb
        self.n_up = n_up
        self.n_down = n_down
        self.alpha_strings = strings(n_orb, n_up)
        self.beta_strings = strings(n_orb, n_down)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.alpha_strings), len(self.beta_strings)

    @property
    def dimension(self) -> int:
        return len(self.alpha_strings) * len(self.beta_strings)

    def alpha_positions(self, alpha: np.ndarray) -> np.ndarray:
        return _lookup(self.alpha_strings, alpha)

    def beta_positions(self, beta: np.ndarray) -> np.ndarray:
        return _lookup(self.beta_strings, beta)

    def positions(self, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """
        Flat amplitude index of each (alpha, beta) pair; -1 where the pair is outside the sector.
        """
        ia, ib = self.alpha_positions(alpha), self.beta_positions(beta)
        return np.where((ia >= 0) & (ib >= 0), ia * len(self.beta_strings) + ib, -1)

    def basis(self) -> 'DeterminantBasis':
        alpha = np.repeat(self.alpha_strings, len(self.beta_strings))
        beta = np.tile(self.beta_strings, len(self.alpha_strings))
        return DeterminantBasis(self.n_orb, self.n_up, self.n_down, alpha, beta)


def _lookup(table: np.ndarray, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if table.size == 0:
        return np.full(values.shape, -1, dtype=np.int64)
    pos = np.searchsorted(table, values)
    pos = np.minimum(pos, table.size - 1)
    return np.where(table[pos] == values, pos, -1).astype(np.int64)


class DeterminantBasis:
    """
    Ordered, duplicate-free set of determinants sharing one (n_up, n_down) sector.

    Order is insertion order, so extending a basis keeps existing positions.
    """

    def __init__(self, n_orb: int, n_up: int, n_down: int,
                 alpha: Iterable[int] = (), beta: Iterable[int] = ()):
        self.n_orb = n_orb
        self.n_up = n_up
        self.n_down = n_down
        self.alpha = np.array(list(alpha) if not isinstance(alpha, np.ndarray) else alpha, dtype=np.int64)
        self.beta = np.array(list(beta) if not isinstance(beta, np.ndarray) else beta, dtype=np.int64)
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 1:
            raise ValueError('alpha and beta must be 1-d arrays of equal length')
        bad = (popcount_array(self.alpha) != n_up) | (popcount_array(self.beta) != n_down)
        limit = 1 << n_orb
        bad |= (self.alpha < 0) | (self.alpha >= limit) | (self.beta < 0) | (self.beta >= limit)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise SectorError(
                f'determinant ({self.alpha[k]:#x}, {self.beta[k]:#x}) is not in the ({n_up}, {n_down}) sector '
                f'of {n_orb} orbitals'
            )
        if np.unique(self.keys).size != self.keys.size:
            raise ValueError('determinant basis contains duplicates')
        self.alpha.setflags(write=False)
        self.beta.setflags(write=False)

    @staticmethod
    def from_determinants(n_orb: int, n_up: int, n_down: int, dets: Iterable[Determinant]) -> 'DeterminantBasis':
        dets = list(dets)
        return DeterminantBasis.unique(n_orb, n_up, n_down, [d.alpha for d in dets], [d.beta for d in dets])

    @staticmethod
    def unique(n_orb: int, n_up: int, n_down: int, alpha, beta) -> 'DeterminantBasis':
        """Build a basis from possibly repeated determinants, keeping first occurrences."""
        alpha = np.asarray(alpha, dtype=np.int64)
        beta = np.asarray(beta, dtype=np.int64)
        _, first = np.unique(_keys(alpha, beta), return_index=True)
        first.sort()
        return DeterminantBasis(n_orb, n_up, n_down, alpha[first], beta[first])

    @cached_property
    def keys(self) -> np.ndarray:
        return _keys(self.alpha, self.beta)

    @cached_property
    def _sorted(self):
        order = np.argsort(self.keys, kind='stable')
        return self.keys[order], order

    def __len__(self) -> int:
        return int(self.alpha.size)

    def __iter__(self) -> Iterator[Determinant]:
        for a, b in zip(self.alpha.tolist(), self.beta.tolist()):
            yield Determinant(a, b)

    def __getitem__(self, i: int) -> Determinant:
        return Determinant(int(self.alpha[i]), int(self.beta[i]))

    def __contains__(self, det: Determinant) -> bool:
        return self.index(det) >= 0

    def index(self, det: Determinant) -> int:
        return int(self.positions(np.array([det.alpha]), np.array([det.beta]))[0])

    def positions(self, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """Position of each (alpha, beta) pair in this basis, -1 where absent."""
        if not len(self):
            return np.full(np.shape(alpha), -1, dtype=np.int64)
        sorted_keys, order = self._sorted
        pos = _lookup(sorted_keys, _keys(alpha, beta))
        return np.where(pos >= 0, order[np.maximum(pos, 0)], -1)

    def same_sector(self, other: 'DeterminantBasis') -> bool:
        return (self.n_orb, self.n_up, self.n_down) == (other.n_orb, other.n_up, other.n_down)

    def extend(self, alpha, beta) -> 'DeterminantBasis':
        """A new basis with the determinants not already present appended in first-seen order."""
        alpha = np.asarray(alpha, dtype=np.int64)
        beta = np.asarray(beta, dtype=np.int64)
        new = DeterminantBasis.unique(self.n_orb, self.n_up, self.n_down, alpha, beta)
        fresh = self.positions(new.alpha, new.beta) < 0
        return DeterminantBasis(self.n_orb, self.n_up, self.n_down,
                                np.concatenate([self.alpha, new.alpha[fresh]]),
                                np.concatenate([self.beta, new.beta[fresh]]))

    def to_text(self) -> str:
        order = np.lexsort((self.beta, self.alpha))
        width = max(1, (self.n_orb + 3) // 4)
        return ''.join(f'{self.alpha[k]:0{width}x},{self.beta[k]:0{width}x}\n' for k in order)

    @staticmethod
    def from_text(text: str, n_orb: int, n_up: int, n_down: int) -> 'DeterminantBasis':
        alpha, beta = [], []
        for number, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                a, b = line.split(',')
                alpha.append(int(a, 16))
                beta.append(int(b, 16))
            except ValueError as e:
                raise ValueError(f'line {number}: expected "alpha_hex,beta_hex", got {line!r}') from e
        return DeterminantBasis(n_orb, n_up, n_down, alpha, beta)
