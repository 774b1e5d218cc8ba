"""
Particle-number-conserving circuits over 2 * n_orb qubits and Givens-network synthesis
of real orbital rotations.

Qubit q < n_orb is the alpha spin-orbital q, qubit n_orb + q the beta spin-orbital q.
XXPlusYY(p, q, theta, beta) maps
    |1_p 0_q> -> cos(theta/2) |10> - i e^{i beta} sin(theta/2) |01>
    |0_p 1_q> -> -i e^{-i beta} sin(theta/2) |10> + cos(theta/2) |01>
and fixes |00> and |11>. With beta = pi/2 on neighbouring qubits it rotates the orbitals
a+_p, a+_q by [[cos, -sin], [sin, cos]] of theta/2.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .constants import GIVENS_TOLERANCE
from .model import ParameterError
from .utils import is_orthogonal

logger = logging.getLogger(__name__)

GIVENS_BETA = math.pi / 2


@dataclass(frozen=True)
class X:
    q: int

    def inverse(self) -> 'X':
        return self

    def qubits(self) -> Tuple[int, ...]:
        return (self.q,)

    def to_text(self) -> str:
        return f'X {self.q}'


@dataclass(frozen=True)
class XXPlusYY:
    q1: int
    q2: int
    theta: float
    beta: float = GIVENS_BETA

    def inverse(self) -> 'XXPlusYY':
        return XXPlusYY(self.q1, self.q2, -self.theta, self.beta)

    def qubits(self) -> Tuple[int, ...]:
        return self.q1, self.q2

    def to_text(self) -> str:
        return f'XXPLUSYY {self.q1} {self.q2} {self.theta!r} {self.beta!r}'


@dataclass(frozen=True)
class Phase:
    q: int
    phi: float

    def inverse(self) -> 'Phase':
        return Phase(self.q, -self.phi)

    def qubits(self) -> Tuple[int, ...]:
        return (self.q,)

    def to_text(self) -> str:
        return f'PHASE {self.q} {self.phi!r}'


@dataclass(frozen=True)
class CPhase:
    q1: int
    q2: int
    phi: float

    def inverse(self) -> 'CPhase':
        return CPhase(self.q1, self.q2, -self.phi)

    def qubits(self) -> Tuple[int, ...]:
        return self.q1, self.q2

    def to_text(self) -> str:
        return f'CPHASE {self.q1} {self.q2} {self.phi!r}'


Gate = Union[X, XXPlusYY, Phase, CPhase]

_PARSERS = {
    'X': (X, (int,)),
    'XXPLUSYY': (XXPlusYY, (int, int, float, float)),
    'PHASE': (Phase, (int, float)),
    'CPHASE': (CPhase, (int, int, float)),
}


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: Tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'gates', tuple(self.gates))
        if self.n_qubits < 0 or self.n_qubits % 2:
            raise ParameterError(f'a spin-orbital circuit needs an even qubit count, got {self.n_qubits}')
        for k, gate in enumerate(self.gates):
            qs = gate.qubits()
            if any(q < 0 or q >= self.n_qubits for q in qs):
                raise ParameterError(f'gate {k} ({gate.to_text()}) addresses a qubit outside [0, {self.n_qubits})')
            if len(set(qs)) != len(qs):
                raise ParameterError(f'gate {k} ({gate.to_text()}) repeats a qubit')

    @property
    def n_orb(self) -> int:
        return self.n_qubits // 2

    def __len__(self) -> int:
        return len(self.gates)

    def preparation(self) -> Tuple[X, ...]:
        """The leading run of X gates."""
        prep = []
        for gate in self.gates:
            if not isinstance(gate, X):
                break
            prep.append(gate)
        return tuple(prep)

    def to_text(self) -> str:
        lines = [f'QUBITS {self.n_qubits}'] + [g.to_text() for g in self.gates]
        return '\n'.join(lines) + '\n'

    @staticmethod
    def from_text(text: str) -> 'Circuit':
        n_qubits = None
        gates: List[Gate] = []
        for number, raw in enumerate(text.splitlines(), 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            name, *args = line.split()
            try:
                if name.upper() == 'QUBITS':
                    n_qubits = int(args[0])
                    continue
                cls, types = _PARSERS[name.upper()]
                if len(args) != len(types):
                    raise ValueError(f'{name} takes {len(types)} arguments, got {len(args)}')
                gates.append(cls(*(t(a) for t, a in zip(types, args))))
            except (KeyError, ValueError, IndexError) as e:
                raise ValueError(f'line {number}: cannot parse {raw.strip()!r}: {e}') from e
        if n_qubits is None:
            raise ValueError('circuit text has no QUBITS header')
        return Circuit(n_qubits, tuple(gates))


@dataclass(frozen=True)
class GateCensus:
    n_xxpyy: int
    n_cp: int
    n_cp_same: int
    n_cp_opp: int
    n_phase: int
    n_x: int

    @property
    def n_two_qubit(self) -> int:
        return self.n_xxpyy + self.n_cp

    def to_dict(self):
        return {'n_xxpyy': self.n_xxpyy, 'n_cp': self.n_cp, 'n_cp_same': self.n_cp_same,
                'n_cp_opp': self.n_cp_opp, 'n_phase': self.n_phase, 'n_x': self.n_x,
                'n_two_qubit': self.n_two_qubit}


def gate_census(c: Circuit) -> GateCensus:
    n = c.n_orb
    counts = {X: 0, XXPlusYY: 0, Phase: 0}
    same = opp = 0
    for gate in c.gates:
        if isinstance(gate, CPhase):
            if (gate.q1 < n) == (gate.q2 < n):
                same += 1
            else:
                opp += 1
        else:
            counts[type(gate)] += 1
    return GateCensus(counts[XXPlusYY], same + opp, same, opp, counts[Phase], counts[X])


def givens_network(U: np.ndarray, offset: int = 0, order: str = 'columns',
                   tol: float = GIVENS_TOLERANCE) -> List[Gate]:
    """
    Gates realizing the real orbital rotation a+_j -> sum_i U[i, j] a+_i on the qubits
    offset .. offset + n - 1, built from nearest-neighbour XXPlusYY gates and Phase(pi)
    sign flips. Rotations whose sine is at most ``tol`` are skipped.

    :param order: ``columns`` eliminates below the diagonal column by column from the left;
        ``rows`` eliminates rows from the bottom by rotating adjacent columns
    """
    U = np.asarray(U)
    if np.iscomplexobj(U):
        if np.max(np.abs(U.imag), initial=0.0) > tol:
            raise ParameterError('Givens synthesis needs a real orthogonal matrix')
        U = U.real
    if not is_orthogonal(U):
        raise ParameterError('Givens synthesis needs an orthogonal matrix (to 1e-10)')
    if order == 'columns':
        return _columns_network(U, offset, tol)
    if order == 'rows':
        return _rows_network(U, offset, tol)
    raise ParameterError(f"unknown Givens order {order!r}, expected 'columns' or 'rows'")


def _sign_flips(diagonal: np.ndarray, offset: int) -> List[Gate]:
    return [Phase(offset + k, math.pi) for k in np.flatnonzero(diagonal < 0)]


def _columns_network(U: np.ndarray, offset: int, tol: float) -> List[Gate]:
    # G_m ... G_1 U = D, so U = G_1^T ... G_m^T D: D acts first, then G_m^T down to G_1^T.
    M = np.array(U, dtype=np.float64, copy=True)
    n = M.shape[0]
    steps = []
    for k in range(n - 1):
        for l in range(n - 1, k, -1):
            f, g = M[l - 1, k], M[l, k]
            if abs(g) <= tol:
                continue
            r = math.hypot(f, g)
            c, s = f / r, g / r
            upper, lower = M[l - 1].copy(), M[l].copy()
            M[l - 1] = c * upper + s * lower
            M[l] = -s * upper + c * lower
            steps.append((l - 1, c, s))
    gates = _sign_flips(np.diag(M), offset)
    for row, c, s in reversed(steps):
        gates.append(XXPlusYY(offset + row, offset + row + 1, 2.0 * math.atan2(s, c), GIVENS_BETA))
    return gates


def _rows_network(U: np.ndarray, offset: int, tol: float) -> List[Gate]:
    # U R_1 ... R_m = D, so U = D R_m^T ... R_1^T: R_1^T acts first and D last.
    M = np.array(U, dtype=np.float64, copy=True)
    n = M.shape[0]
    gates: List[Gate] = []
    for k in range(n - 1, 0, -1):
        for j in range(k):
            a, b = M[k, j], M[k, j + 1]
            if abs(a) <= tol:
                continue
            r = math.hypot(a, b)
            c, s = b / r, a / r
            left, right = M[:, j].copy(), M[:, j + 1].copy()
            M[:, j] = c * left - s * right
            M[:, j + 1] = s * left + c * right
            gates.append(XXPlusYY(offset + j, offset + j + 1, 2.0 * math.atan2(s, c), GIVENS_BETA))
    return gates + _sign_flips(np.diag(M), offset)


def inverse_gates(gates: Sequence[Gate]) -> List[Gate]:
    return [g.inverse() for g in reversed(gates)]


def single_particle_matrix(gates: Sequence[Gate], n: int, offset: int = 0) -> np.ndarray:
    """
    The one-body matrix realized on qubits offset .. offset + n - 1 by nearest-neighbour
    XXPlusYY and Phase gates, as columns of a+_j images.
    """
    total = np.eye(n, dtype=np.complex128)
    for gate in gates:
        step = np.eye(n, dtype=np.complex128)
        if isinstance(gate, Phase):
            step[gate.q - offset, gate.q - offset] = np.exp(1j * gate.phi)
        elif isinstance(gate, XXPlusYY):
            p, q = gate.q1 - offset, gate.q2 - offset
            c, s = math.cos(gate.theta / 2), math.sin(gate.theta / 2)
            step[p, p] = step[q, q] = c
            step[q, p] = -1j * np.exp(1j * gate.beta) * s
            step[p, q] = -1j * np.exp(-1j * gate.beta) * s
        else:
            raise ParameterError(f'{gate.to_text()} is not a one-body gate')
        total = step @ total
    return total
