from dataclasses import dataclass
from typing import FrozenSet, Iterable, Tuple

import numpy as np

from .model import ParameterError

Edge = Tuple[int, int]

# Every 4th orbital carries an alpha-beta coupling in the line layout.
OPP_SPIN_STRIDE = 4


def _normalize(edges: Iterable[Edge]) -> FrozenSet[Edge]:
    return frozenset((min(int(p), int(q)), max(int(p), int(q))) for p, q in edges)


@dataclass(frozen=True)
class Topology:
    """
    Orbital pairs that keep their Jastrow couplings. Pairs are unordered; a self pair
    (p, p) in ``opp_spin_edges`` is the on-site alpha-beta coupling.
    """
    name: str
    n_orb: int
    same_spin_edges: FrozenSet[Edge]
    opp_spin_edges: FrozenSet[Edge]

    def __post_init__(self):
        object.__setattr__(self, 'same_spin_edges', _normalize(self.same_spin_edges))
        object.__setattr__(self, 'opp_spin_edges', _normalize(self.opp_spin_edges))
        for p, q in self.same_spin_edges | self.opp_spin_edges:
            if p < 0 or q >= self.n_orb:
                raise ParameterError(f'edge ({p}, {q}) outside [0, {self.n_orb})')

    def same_spin_mask(self) -> np.ndarray:
        return _mask(self.same_spin_edges, self.n_orb)

    def opp_spin_mask(self) -> np.ndarray:
        return _mask(self.opp_spin_edges, self.n_orb)


def _mask(edges: FrozenSet[Edge], n_orb: int) -> np.ndarray:
    mask = np.zeros((n_orb, n_orb), dtype=bool)
    for p, q in edges:
        mask[p, q] = mask[q, p] = True
    return mask


def complete_topology(n_orb: int) -> Topology:
    pairs = [(p, q) for p in range(n_orb) for q in range(p, n_orb)]
    return Topology('complete', n_orb, frozenset(pairs), frozenset(pairs))


def line_topology(n_orb: int) -> Topology:
    """
    Nearest-neighbour same-spin pairs along the orbital line, and on-site alpha-beta pairs
    at every 4th orbital.
    """
    same = [(p, p + 1) for p in range(n_orb - 1)]
    opp = [(p, p) for p in range(0, n_orb, OPP_SPIN_STRIDE)]
    return Topology('line', n_orb, frozenset(same), frozenset(opp))


def empty_topology(n_orb: int) -> Topology:
    return Topology('empty', n_orb, frozenset(), frozenset())


_TOPOLOGIES = {
    'complete': complete_topology,
    'line': line_topology,
    'empty': empty_topology,
}


def topology(name: str, n_orb: int) -> Topology:
    try:
        return _TOPOLOGIES[name](n_orb)
    except KeyError:
        raise ParameterError(f'unknown topology {name!r}, expected one of {sorted(_TOPOLOGIES)}')
