"""
Unitary cluster Jastrow ansatz built from doubles amplitudes.

The operator is U_final * prod_k (U_k exp(i J_k) U_k^+) with layer 1 acting first, where
J_k = 1/2 sum_pq J_same[p,q] (n_pa n_qa + n_pb n_qb) + sum_pq J_opp[p,q] n_pa n_qb.
"""
import json
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from .circuit import Circuit, CPhase, Gate, Phase, X, givens_network, inverse_gates
from .determinant import Determinant, SectorSpace
from .model import ChainSpec, ParameterError
from .orbitals import T2Amplitudes
from .statevector import SectorState, apply_diag_coulomb, apply_orbital_rotation
from .topology import Topology
from .utils import fix_column_phases, is_orthogonal

logger = logging.getLogger(__name__)

# Eigenvalues of the amplitude matrix below this (relative to the largest) count as zero rank.
RANK_TOLERANCE = 1e-12

# A CP phase below this share of the largest |J| counts as low amplitude.
LOW_AMPLITUDE_SHARE = 0.01


def _frozen(a, dtype=np.float64) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UcjLayer:
    U: np.ndarray
    J_same: np.ndarray
    J_opp: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U)
        object.__setattr__(self, 'U', _frozen(U, np.complex128 if np.iscomplexobj(U) else np.float64))
        object.__setattr__(self, 'J_same', _frozen(self.J_same))
        object.__setattr__(self, 'J_opp', _frozen(self.J_opp))
        if not is_orthogonal(self.U):
            raise ParameterError('layer orbital rotation is not unitary to 1e-10')
        for name in ('J_same', 'J_opp'):
            J = getattr(self, name)
            if J.shape != self.U.shape or np.max(np.abs(J - J.T), initial=0.0) > 1e-12:
                raise ParameterError(f'{name} must be a symmetric {self.U.shape} matrix')


@dataclass(frozen=True, eq=False)
class UcjParams:
    """
    r layers of orbital rotations and Jastrow phases plus the measurement-basis rotation.

    The masks mark Jastrow entries that are kept; pruning clears both the mask and the matching
    entries of every layer.
    """
    n_orb: int
    layers: Tuple[UcjLayer, ...]
    final_rotation: np.ndarray = None
    same_spin_mask: np.ndarray = None
    opp_spin_mask: np.ndarray = None

    def __post_init__(self):
        n = self.n_orb
        object.__setattr__(self, 'layers', tuple(self.layers))
        final = np.eye(n) if self.final_rotation is None else np.asarray(self.final_rotation)
        object.__setattr__(self, 'final_rotation', _frozen(final, np.complex128 if np.iscomplexobj(final) else np.float64))
        for name in ('same_spin_mask', 'opp_spin_mask'):
            mask = getattr(self, name)
            mask = np.ones((n, n), dtype=bool) if mask is None else np.array(mask, dtype=bool, copy=True)
            mask.setflags(write=False)
            object.__setattr__(self, name, mask)
        if not self.layers:
            raise ParameterError('UCJ needs at least one layer')
        if any(layer.U.shape != (n, n) for layer in self.layers) or self.final_rotation.shape != (n, n):
            raise ParameterError(f'every rotation must be {n}x{n}')
        if not is_orthogonal(self.final_rotation):
            raise ParameterError('final rotation is not unitary to 1e-10')

    @property
    def r(self) -> int:
        return len(self.layers)

    def to_json(self) -> str:
        def real(a):
            if np.iscomplexobj(a):
                raise ParameterError('only real parameters serialize to JSON')
            return a.tolist()
        return json.dumps({
            'n_orb': self.n_orb,
            'r': self.r,
            'layers': [{'U': real(l.U), 'J_same': l.J_same.tolist(), 'J_opp': l.J_opp.tolist()} for l in self.layers],
            'final_rotation': real(self.final_rotation),
            'same_spin_mask': self.same_spin_mask.tolist(),
            'opp_spin_mask': self.opp_spin_mask.tolist(),
        })

    @staticmethod
    def from_json(text: str) -> 'UcjParams':
        d = json.loads(text)
        try:
            layers = [UcjLayer(l['U'], l['J_same'], l['J_opp']) for l in d['layers']]
            if len(layers) != int(d.get('r', len(layers))):
                raise ParameterError(f"r={d['r']} does not match {len(layers)} layers")
            return UcjParams(int(d['n_orb']), tuple(layers), d.get('final_rotation'),
                             d.get('same_spin_mask'), d.get('opp_spin_mask'))
        except (KeyError, TypeError) as e:
            raise ParameterError(f'malformed UCJ parameter file: {e}') from e


def _amplitude_matrix(t2: np.ndarray) -> np.ndarray:
    no, nv = t2.shape[0], t2.shape[2]
    T = t2.transpose(0, 2, 1, 3).reshape(no * nv, no * nv)
    return 0.5 * (T + T.T)


def _leading_eigenpairs(t2: np.ndarray):
    values, vectors = scipy.linalg.eigh(_amplitude_matrix(t2))
    order = np.argsort(-np.abs(values), kind='stable')
    values, vectors = values[order], vectors[:, order]
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    rank = int(np.sum(np.abs(values) > RANK_TOLERANCE * scale))
    return values, vectors, rank


def t2_rank(t2: Union[T2Amplitudes, np.ndarray]) -> int:
    return _leading_eigenpairs(_tensor(t2))[2]


def _tensor(t2) -> np.ndarray:
    t = t2.t2 if isinstance(t2, T2Amplitudes) else np.asarray(t2, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise ParameterError('t2 contains non-finite entries')
    return t


def from_t_amplitudes(t2: Union[T2Amplitudes, np.ndarray], r: int,
                      final_rotation: Optional[np.ndarray] = None) -> UcjParams:
    """
    Double-factorize t2 into r layers.

    The amplitude matrix T[(i,a), (j,b)] = t2[i,j,a,b] is diagonalized and its eigenvectors taken
    by decreasing |eigenvalue|. Eigenvector k, placed in the occupied-virtual block of a symmetric
    one-body matrix S_k, is diagonalized as S_k = U_k diag(x) U_k^T and gives
    J_same = J_opp = lambda_k x x^T. Layers beyond the rank of T are identity rotations with zero
    phases.
    """
    if not isinstance(r, (int, np.integer)) or r < 1:
        raise ParameterError(f'expansion order must be a positive integer, got {r!r}')
    t = _tensor(t2)
    no, nv = t.shape[0], t.shape[2]
    n = no + nv
    values, vectors, rank = _leading_eigenpairs(t)
    layers = []
    for k in range(r):
        if k >= rank:
            layers.append(UcjLayer(np.eye(n), np.zeros((n, n)), np.zeros((n, n))))
            continue
        S = np.zeros((n, n))
        S[:no, no:] = vectors[:, k].reshape(no, nv)
        S = S + S.T
        x, U = scipy.linalg.eigh(S)
        U = fix_column_phases(U)
        J = values[k] * np.outer(x, x)
        layers.append(UcjLayer(U, J, J.copy()))
    logger.debug('double factorization: rank %d, %d layers requested', rank, r)
    return UcjParams(n, tuple(layers), final_rotation)


def reconstruct_t2(p: UcjParams, n_occ: int) -> np.ndarray:
    """The doubles amplitudes induced by the layers' same-spin Jastrow matrices."""
    t2 = 0.0
    for layer in p.layers:
        U = layer.U.real
        occ, virt = U[:n_occ], U[n_occ:]
        t2 = t2 + np.einsum('pq,ip,ap,jq,bq->ijab', layer.J_same, occ, virt, occ, virt, optimize=True)
    return np.asarray(t2)


def reconstruction_residuals(t2: Union[T2Amplitudes, np.ndarray], r_max: int) -> List[float]:
    """Frobenius norm of t2 minus its r-layer reconstruction for r = 1 .. r_max."""
    t = _tensor(t2)
    full = from_t_amplitudes(t, r_max)
    residuals = []
    for r in range(1, r_max + 1):
        partial = UcjParams(full.n_orb, full.layers[:r])
        residuals.append(float(np.linalg.norm(t - reconstruct_t2(partial, t.shape[0]))))
    return residuals


def prune_to_topology(p: UcjParams, topo: Topology) -> UcjParams:
    """Zero the Jastrow couplings of orbital pairs outside the topology."""
    if topo.n_orb != p.n_orb:
        raise ParameterError(f'topology covers {topo.n_orb} orbitals, parameters {p.n_orb}')
    same = p.same_spin_mask & topo.same_spin_mask()
    opp = p.opp_spin_mask & topo.opp_spin_mask()
    layers = tuple(UcjLayer(l.U, l.J_same * same, l.J_opp * opp) for l in p.layers)
    return UcjParams(p.n_orb, layers, p.final_rotation, same, opp)


def _jastrow_gates(layer: UcjLayer, p: UcjParams, angle_epsilon: float) -> List[Gate]:
    n = p.n_orb
    gates: List[Gate] = []
    for offset in (0, n):
        for a in range(n):
            phi = 0.5 * layer.J_same[a, a]
            if p.same_spin_mask[a, a] and abs(phi) > angle_epsilon:
                gates.append(Phase(offset + a, phi))
        for a in range(n):
            for b in range(a + 1, n):
                phi = layer.J_same[a, b]
                if p.same_spin_mask[a, b] and abs(phi) > angle_epsilon:
                    gates.append(CPhase(offset + a, offset + b, phi))
    for a in range(n):
        for b in range(n):
            phi = layer.J_opp[a, b]
            if p.opp_spin_mask[a, b] and abs(phi) > angle_epsilon:
                gates.append(CPhase(a, n + b, phi))
    return gates


def _both_registers(U: np.ndarray, n: int, order: str) -> List[Gate]:
    return givens_network(U, 0, order) + givens_network(U, n, order)


def synthesize_circuit(p: UcjParams, reference: Determinant, angle_epsilon: float = 0.0,
                       order: str = 'columns') -> Circuit:
    """
    X gates preparing ``reference``, then per layer the Givens network of U_k^+ on both
    registers, the Jastrow phases and the inverse network, and finally the network of the
    final rotation. Phase and CPhase gates with |angle| <= angle_epsilon are dropped.
    """
    n = p.n_orb
    if reference.alpha >> n or reference.beta >> n:
        raise ParameterError(f'reference {reference} does not fit {n} orbitals')
    if angle_epsilon < 0:
        raise ParameterError(f'angle_epsilon must be non-negative, got {angle_epsilon}')
    gates: List[Gate] = [X(q) for q in range(n) if (reference.alpha >> q) & 1]
    gates += [X(n + q) for q in range(n) if (reference.beta >> q) & 1]
    for layer in p.layers:
        if np.iscomplexobj(layer.U):
            raise ParameterError('circuit synthesis needs real orbital rotations')
        forward = _both_registers(layer.U.T, n, order)
        gates += forward
        gates += _jastrow_gates(layer, p, angle_epsilon)
        gates += inverse_gates(forward)
    gates += _both_registers(p.final_rotation, n, order)
    circuit = Circuit(2 * n, tuple(gates))
    logger.debug('synthesized UCJ circuit: r=%d, %d gates', p.r, len(circuit))
    return circuit


def ucj_state(p: UcjParams, spec: ChainSpec, reference: Optional[Determinant] = None) -> SectorState:
    """The ansatz applied to ``reference`` by determinant algebra on the sector."""
    if spec.n_orb != p.n_orb:
        raise ParameterError(f'parameters act on {p.n_orb} orbitals, chain has {spec.n_orb}')
    reference = reference or Determinant.reference(spec.n_orb, spec.n_up, spec.n_down)
    state = SectorState.reference(SectorSpace(spec.n_orb, spec.n_up, spec.n_down), reference)
    for layer in p.layers:
        U = np.asarray(layer.U)
        state = apply_orbital_rotation(state, U.conj().T)
        state = apply_diag_coulomb(state, layer.J_same * p.same_spin_mask, layer.J_opp * p.opp_spin_mask)
        state = apply_orbital_rotation(state, U)
    return apply_orbital_rotation(state, p.final_rotation)


@dataclass(frozen=True)
class CpHistogram:
    counts: np.ndarray
    edges: np.ndarray
    low_fraction: float
    n_entries: int


def cp_amplitudes(p: UcjParams) -> np.ndarray:
    """|phase| of every Jastrow entry that maps to a CP gate, zeros included."""
    n = p.n_orb
    upper = np.triu(np.ones((n, n), dtype=bool), k=1) & p.same_spin_mask
    values = []
    for layer in p.layers:
        same = np.abs(layer.J_same[upper])
        values += [same, same, np.abs(layer.J_opp[p.opp_spin_mask])]
    return np.concatenate(values) if values else np.zeros(0)


def cp_histogram(p: UcjParams, bins: int = 20) -> CpHistogram:
    if bins < 2:
        raise ParameterError(f'need at least 2 bins, got {bins}')
    values = cp_amplitudes(p)
    top = float(values.max(initial=0.0))
    counts, edges = np.histogram(values, bins=bins, range=(0.0, top if top > 0 else 1.0))
    low = float(np.mean(values < LOW_AMPLITUDE_SHARE * top)) if top > 0 and values.size else 1.0
    return CpHistogram(counts, edges, low, int(values.size))


def layer_gate_count(n_orb: int) -> int:
    """Two-qubit gates of one dense layer with every Jastrow entry nonzero."""
    return 2 * n_orb * (n_orb - 1) + n_orb * (n_orb - 1) + n_orb * n_orb
