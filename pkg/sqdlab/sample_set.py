import csv
import io
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np

from .constants import SampleOrigin
from .determinant import DeterminantBasis, SectorError
from .utils import from_bitstring, popcount_array, to_bitstring


@dataclass(frozen=True, eq=False)
class SampleSet:
    """
    Measured bitstrings as qubit-register integers (alpha register in the low n_orb bits)
    mapped to their shot counts.
    """
    counts: Mapping[int, int]
    n_qubits: int
    origin: SampleOrigin = SampleOrigin.SIMULATED

    def __post_init__(self):
        object.__setattr__(self, 'origin', SampleOrigin(self.origin))
        limit = 1 << self.n_qubits
        clean: Dict[int, int] = {}
        for key, count in self.counts.items():
            key, count = int(key), int(count)
            if not 0 <= key < limit:
                raise ValueError(f'bitstring {key} does not fit {self.n_qubits} qubits')
            if count < 0:
                raise ValueError(f'negative count {count} for bitstring {key}')
            if count:
                clean[key] = clean.get(key, 0) + count
        object.__setattr__(self, 'counts', clean)

    @staticmethod
    def from_arrays(keys: np.ndarray, counts: np.ndarray, n_qubits: int,
                    origin: SampleOrigin = SampleOrigin.SIMULATED) -> 'SampleSet':
        keys = np.asarray(keys, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        unique, inverse = np.unique(keys, return_inverse=True)
        merged = np.bincount(inverse, weights=counts, minlength=unique.size).astype(np.int64)
        return SampleSet(dict(zip(unique.tolist(), merged.tolist())), n_qubits, origin)

    @property
    def n_orb(self) -> int:
        return self.n_qubits // 2

    @property
    def total_shots(self) -> int:
        return sum(self.counts.values())

    def __len__(self) -> int:
        return len(self.counts)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Sorted keys and their counts."""
        if not self.counts:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        keys = np.array(sorted(self.counts), dtype=np.int64)
        return keys, np.array([self.counts[k] for k in keys.tolist()], dtype=np.int64)

    def registers(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Alpha strings, beta strings and counts of the sorted keys."""
        keys, counts = self.arrays()
        mask = (1 << self.n_orb) - 1
        return keys & mask, keys >> self.n_orb, counts

    def in_sector(self, n_up: int, n_down: int) -> np.ndarray:
        alpha, beta, _ = self.registers()
        return (popcount_array(alpha) == n_up) & (popcount_array(beta) == n_down)

    def distribution(self) -> Tuple[np.ndarray, np.ndarray]:
        """Keys and their empirical probabilities."""
        keys, counts = self.arrays()
        total = counts.sum()
        return keys, counts / total if total else counts.astype(np.float64)

    def basis(self, n_up: int, n_down: int) -> DeterminantBasis:
        """Unique determinants of the sample, which must all lie in the (n_up, n_down) sector."""
        alpha, beta, _ = self.registers()
        if not self.in_sector(n_up, n_down).all():
            raise SectorError(f'sample holds bitstrings outside the ({n_up}, {n_down}) sector')
        return DeterminantBasis(self.n_orb, n_up, n_down, alpha, beta)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['bitstring', 'count'])
        keys, counts = self.arrays()
        for key, count in zip(keys.tolist(), counts.tolist()):
            writer.writerow([to_bitstring(key, self.n_qubits), count])
        return out.getvalue()

    @staticmethod
    def from_csv(text: str, origin: SampleOrigin = SampleOrigin.EXTERNAL, n_qubits: int = None) -> 'SampleSet':
        """
        Parse a bitstring,count table. ``n_qubits`` is required for a table without rows.
        """
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != ['bitstring', 'count']:
            raise ValueError(f'expected header "bitstring,count", got {reader.fieldnames}')
        counts: Dict[int, int] = {}
        width = n_qubits
        for number, row in enumerate(reader, 2):
            bits = row['bitstring'].strip()
            if width is None:
                width = len(bits)
            if len(bits) != width:
                raise ValueError(f'line {number}: bitstring width {len(bits)} differs from {width}')
            key = from_bitstring(bits)
            counts[key] = counts.get(key, 0) + int(row['count'])
        if width is None:
            raise ValueError('sample file has no rows')
        return SampleSet(counts, width, origin)
