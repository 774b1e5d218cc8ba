"""
Exact circuit simulation in the computational basis.

The sector simulator keeps only the amplitudes of the fixed (n_up, n_down) block as a
psi[alpha_index, beta_index] matrix, beta varying fastest when flattened. The full simulator
keeps all 2^n_qubits amplitudes with qubit q as bit q of the index, so the alpha register
sits in the low n_orb bits.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .circuit import Circuit, CPhase, Phase, X, XXPlusYY
from .constants import FULL_SIM_MAX_QUBITS
from .determinant import Determinant, ResourceGuardError, SectorError, SectorSpace
from .model import ChainSpec, ParameterError
from .utils import occupation_matrix

logger = logging.getLogger(__name__)

_NORM_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SectorState:
    space: SectorSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        psi = np.array(self.amplitudes, dtype=np.complex128, copy=True).reshape(self.space.shape)
        psi.setflags(write=False)
        object.__setattr__(self, 'amplitudes', psi)

    @staticmethod
    def reference(space: SectorSpace, det: Determinant) -> 'SectorState':
        pos = int(space.positions(np.array([det.alpha]), np.array([det.beta]))[0])
        if pos < 0:
            raise SectorError(f'reference {det} is not in the ({space.n_up}, {space.n_down}) sector')
        psi = np.zeros(space.dimension, dtype=np.complex128)
        psi[pos] = 1.0
        return SectorState(space, psi)

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.ravel()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.vector) ** 2
        return p / p.sum()

    def amplitude(self, det: Determinant) -> complex:
        pos = int(self.space.positions(np.array([det.alpha]), np.array([det.beta]))[0])
        return complex(self.vector[pos]) if pos >= 0 else 0j

    def keys(self) -> np.ndarray:
        """Qubit-register integer (alpha | beta << n_orb) of every flat amplitude index."""
        n = self.space.n_orb
        return (self.space.alpha_strings[:, None] | (self.space.beta_strings[None, :] << n)).ravel()

    def to_full(self) -> np.ndarray:
        full = np.zeros(1 << (2 * self.space.n_orb), dtype=np.complex128)
        full[self.keys()] = self.vector
        return full

    @staticmethod
    def from_full(full: np.ndarray, space: SectorSpace) -> 'SectorState':
        n = space.n_orb
        keys = (space.alpha_strings[:, None] | (space.beta_strings[None, :] << n)).ravel()
        return SectorState(space, np.asarray(full)[keys])


class _Register:
    """Index tables of one spin register's strings, built per simulation."""

    def __init__(self, table: np.ndarray, n_orb: int):
        self.table = table
        self._occupied = occupation_matrix(table, n_orb).astype(bool).T
        self._hops = {}

    def occupied(self, q: int) -> np.ndarray:
        return self._occupied[q]

    def hop_pairs(self, p: int, q: int) -> Tuple[np.ndarray, np.ndarray]:
        """Positions of strings with p occupied and q empty, and of their p <-> q partners."""
        if (p, q) not in self._hops:
            source = np.flatnonzero(self._occupied[p] & ~self._occupied[q])
            partners = self.table[source] ^ (1 << p) ^ (1 << q)
            self._hops[p, q] = source, np.searchsorted(self.table, partners)
        return self._hops[p, q]


def _xxpyy_coefficients(gate: XXPlusYY):
    c, s = np.cos(gate.theta / 2), np.sin(gate.theta / 2)
    return c, -1j * np.exp(-1j * gate.beta) * s, -1j * np.exp(1j * gate.beta) * s


def _reference_of(c: Circuit) -> Determinant:
    n = c.n_orb
    mask = 0
    for gate in c.preparation():
        mask ^= 1 << gate.q
    return Determinant.from_int(mask, n)


def simulate_sector(c: Circuit, spec: ChainSpec, initial: Optional[SectorState] = None) -> SectorState:
    """
    Run ``c`` on the (spec.n_up, spec.n_down) block only.

    The leading X gates select the reference determinant unless ``initial`` is given, in which
    case the circuit must not start with X gates.
    """
    n = c.n_orb
    if spec.n_orb != n:
        raise ParameterError(f'circuit acts on {n} orbitals, chain has {spec.n_orb}')
    space = SectorSpace(n, spec.n_up, spec.n_down)
    prep = len(c.preparation())
    if initial is None:
        state = SectorState.reference(space, _reference_of(c))
    elif prep:
        raise SectorError('X gates cannot act on a given initial state', gate_index=0)
    else:
        state = initial
    psi = np.array(state.amplitudes, dtype=np.complex128)
    alpha, beta = _Register(space.alpha_strings, n), _Register(space.beta_strings, n)

    for k, gate in enumerate(c.gates[prep:], prep):
        if isinstance(gate, X):
            raise SectorError('X gate after the preparation layer changes the electron number', gate_index=k)
        if isinstance(gate, Phase):
            if gate.q < n:
                psi[alpha.occupied(gate.q), :] *= np.exp(1j * gate.phi)
            else:
                psi[:, beta.occupied(gate.q - n)] *= np.exp(1j * gate.phi)
        elif isinstance(gate, CPhase):
            q1, q2 = sorted((gate.q1, gate.q2))
            factor = np.exp(1j * gate.phi)
            if q2 < n:
                psi[alpha.occupied(q1) & alpha.occupied(q2), :] *= factor
            elif q1 >= n:
                psi[:, beta.occupied(q1 - n) & beta.occupied(q2 - n)] *= factor
            else:
                psi[np.ix_(alpha.occupied(q1), beta.occupied(q2 - n))] *= factor
        elif isinstance(gate, XXPlusYY):
            if (gate.q1 < n) != (gate.q2 < n):
                raise SectorError('XXPlusYY across spin registers does not conserve Sz', gate_index=k)
            cos, m12, m21 = _xxpyy_coefficients(gate)
            if gate.q1 < n:
                src, dst = alpha.hop_pairs(gate.q1, gate.q2)
                a10, a01 = psi[src, :].copy(), psi[dst, :].copy()
                psi[src, :] = cos * a10 + m12 * a01
                psi[dst, :] = m21 * a10 + cos * a01
            else:
                src, dst = beta.hop_pairs(gate.q1 - n, gate.q2 - n)
                a10, a01 = psi[:, src].copy(), psi[:, dst].copy()
                psi[:, src] = cos * a10 + m12 * a01
                psi[:, dst] = m21 * a10 + cos * a01
    result = SectorState(space, psi)
    drift = abs(result.norm() - 1.0)
    if drift > _NORM_TOLERANCE:
        logger.warning('sector simulation norm drifted by %.3e', drift)
    logger.debug('simulated %d gates on the (%d, %d) sector of dimension %d',
                 len(c), spec.n_up, spec.n_down, space.dimension)
    return result


def simulate_full(c: Circuit, max_qubits: int = FULL_SIM_MAX_QUBITS) -> np.ndarray:
    """Statevector over all 2^n_qubits basis states, starting from |0...0>."""
    if c.n_qubits > max_qubits:
        raise ResourceGuardError(f'{c.n_qubits}-qubit statevector', 1 << c.n_qubits, 1 << max_qubits,
                                 'pass max_qubits or set SQDLAB_FULL_SIM_MAX_QUBITS to override')
    index = np.arange(1 << c.n_qubits, dtype=np.int64)
    psi = np.zeros(index.size, dtype=np.complex128)
    psi[0] = 1.0

    def bit(q):
        return ((index >> q) & 1).astype(bool)

    for gate in c.gates:
        if isinstance(gate, X):
            psi = psi[index ^ (1 << gate.q)]
        elif isinstance(gate, Phase):
            psi[bit(gate.q)] *= np.exp(1j * gate.phi)
        elif isinstance(gate, CPhase):
            psi[bit(gate.q1) & bit(gate.q2)] *= np.exp(1j * gate.phi)
        else:
            cos, m12, m21 = _xxpyy_coefficients(gate)
            src = np.flatnonzero(bit(gate.q1) & ~bit(gate.q2))
            dst = src ^ (1 << gate.q1) ^ (1 << gate.q2)
            a10, a01 = psi[src].copy(), psi[dst].copy()
            psi[src] = cos * a10 + m12 * a01
            psi[dst] = m21 * a10 + cos * a01
    return psi


def _string_rotation(U: np.ndarray, table: np.ndarray, n_orb: int) -> np.ndarray:
    """R[J, I] = det U[occ(J), occ(I)]: the action of an orbital rotation on one spin's strings."""
    occ = occupation_matrix(table, n_orb).astype(bool)
    k = int(occ[0].sum()) if len(table) else 0
    if k == 0:
        return np.ones((len(table), len(table)), dtype=np.complex128)
    orbitals = np.nonzero(occ)[1].reshape(len(table), k)
    blocks = U[orbitals[:, None, :, None], orbitals[None, :, None, :]]
    return np.linalg.det(blocks)


def apply_orbital_rotation(state: SectorState, U: np.ndarray) -> SectorState:
    """a+_j -> sum_i U[i, j] a+_i on both spins."""
    space = state.space
    U = np.asarray(U, dtype=np.complex128)
    Ra = _string_rotation(U, space.alpha_strings, space.n_orb)
    Rb = _string_rotation(U, space.beta_strings, space.n_orb)
    return SectorState(space, Ra @ state.amplitudes @ Rb.T)


def apply_diag_coulomb(state: SectorState, J_same: np.ndarray, J_opp: np.ndarray) -> SectorState:
    """
    exp(i (1/2 sum_pq J_same[p,q] (n_pa n_qa + n_pb n_qb) + sum_pq J_opp[p,q] n_pa n_qb)).
    """
    space = state.space
    na = occupation_matrix(space.alpha_strings, space.n_orb)
    nb = occupation_matrix(space.beta_strings, space.n_orb)
    same_a = 0.5 * np.einsum('ip,pq,iq->i', na, J_same, na)
    same_b = 0.5 * np.einsum('jp,pq,jq->j', nb, J_same, nb)
    phase = same_a[:, None] + same_b[None, :] + na @ J_opp @ nb.T
    return SectorState(space, state.amplitudes * np.exp(1j * phase))
