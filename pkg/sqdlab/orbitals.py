import json
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .constants import (DEGENERACY_TOLERANCE, SCF_DIIS_SPACE, SCF_DIIS_START, SCF_LEVEL_SHIFT, SCF_MAX_ITERATIONS,
                        SCF_MIXING, SCF_TOLERANCE, BasisKind, T2Source)
from .davidson import ConvergenceError
from .model import Hamiltonian, ParameterError, rotate_integrals
from .utils import fix_column_phases

logger = logging.getLogger(__name__)

# MP2 denominators at or below this magnitude are treated as a degenerate gap.
_GAP_TOLERANCE = 1e-8
# A converged density farther than this from the aufbau density of its Fock matrix is rejected.
_AUFBAU_TOLERANCE = 1e-4


class DegeneracyError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OrbitalBasis:
    """
    Molecular orbitals as the columns of C over the chain's site orbitals, with ascending
    orbital energies. ``energy`` is the total HF energy and ``n_occ`` the doubly occupied count
    for bases coming out of an SCF.
    """
    kind: BasisKind
    C: np.ndarray
    energies: np.ndarray
    energy: Optional[float] = None
    n_occ: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', BasisKind(self.kind))
        object.__setattr__(self, 'C', _frozen(self.C))
        object.__setattr__(self, 'energies', _frozen(self.energies))
        if self.C.ndim != 2 or self.C.shape[0] != self.C.shape[1] or self.energies.shape != (self.C.shape[0],):
            raise ParameterError(f'orbital basis needs a square C and one energy per column, got '
                                 f'{self.C.shape} and {self.energies.shape}')

    @property
    def n_orb(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class MixMatrix:
    """HF orbitals and energies written as a one-body matrix over the kinetic orbitals."""
    M: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'M', _frozen(self.M))

    def modified(self) -> np.ndarray:
        """M' = 2M - diag(diag(M)): off-diagonal mixing doubled."""
        return 2.0 * self.M - np.diag(np.diag(self.M))

    def is_perturbative(self) -> bool:
        """
        True when every off-diagonal |M_ab| is below |M_aa - M_bb|.
        """
        d = np.diag(self.M)
        gaps = np.abs(d[:, None] - d[None, :])
        off = ~np.eye(len(d), dtype=bool)
        ok = bool(np.all(np.abs(self.M[off]) < gaps[off]))
        if not ok:
            worst = np.max(np.where(off, np.abs(self.M) - gaps, -np.inf))
            logger.warning('mixing matrix is not diagonally dominant (worst excess %.3e eV)', worst)
        return ok


@dataclass(frozen=True, eq=False)
class T2Amplitudes:
    """
    Doubles amplitudes t2[i, j, a, b] over occupied i, j and virtual a, b spatial orbitals.

    ``label`` keeps the method name written in amplitude files (e.g. CCSD).
    """
    t2: np.ndarray
    source: T2Source = T2Source.MP2
    label: str = 'MP2'

    def __post_init__(self):
        object.__setattr__(self, 't2', _frozen(self.t2))
        object.__setattr__(self, 'source', T2Source(self.source))
        t = self.t2
        if t.ndim != 4 or t.shape[0] != t.shape[1] or t.shape[2] != t.shape[3]:
            raise ParameterError(f't2 must have shape (no, no, nv, nv), got {t.shape}')
        if not np.all(np.isfinite(t)):
            raise ParameterError('t2 contains non-finite entries')

    @property
    def n_occ(self) -> int:
        return self.t2.shape[0]

    @property
    def n_virt(self) -> int:
        return self.t2.shape[2]

    @property
    def n_orb(self) -> int:
        return self.n_occ + self.n_virt

    def to_json(self) -> str:
        return json.dumps({'shape': list(self.t2.shape), 'data': self.t2.ravel().tolist(), 'source': self.label})

    @staticmethod
    def from_json(text: str) -> 'T2Amplitudes':
        d = json.loads(text)
        try:
            shape = tuple(int(k) for k in d['shape'])
            t2 = np.asarray(d['data'], dtype=np.float64).reshape(shape)
        except (KeyError, ValueError) as e:
            raise ParameterError(f'malformed t2 file: {e}') from e
        return T2Amplitudes(t2, T2Source.FILE, str(d.get('source', 'CCSD')))


def _ordered_eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ascending eigenpairs with the column phase convention applied. Eigenvalues closer than the
    degeneracy tolerance keep a lexicographic order of their coefficient columns.
    """
    values, vectors = scipy.linalg.eigh(0.5 * (matrix + matrix.T))
    vectors = fix_column_phases(vectors)
    n = len(values)
    group = np.zeros(n, dtype=np.int64)
    for k in range(1, n):
        group[k] = group[k - 1] + (values[k] - values[k - 1] > DEGENERACY_TOLERANCE)
    order = sorted(range(n), key=lambda k: (group[k], tuple(np.round(-vectors[:, k], 12))))
    return values[order], vectors[:, order]


def fock_matrix(H: Hamiltonian, P: np.ndarray) -> np.ndarray:
    """
    Closed-shell Fock matrix h + 2J(P) - K(P) for the per-spin density P.
    """
    J = np.einsum('pqrs,rs->pq', H.V, P)
    K = np.einsum('prsq,rs->pq', H.V, P)
    return H.h + 2.0 * J - K


def _density(C: np.ndarray, n_occ: int) -> np.ndarray:
    occ = C[:, :n_occ]
    return occ @ occ.T


def hf_energy(H: Hamiltonian, P: np.ndarray) -> float:
    """Energy of the closed-shell determinant with per-spin density P."""
    return float(np.sum(P * (H.h + fock_matrix(H, P)))) + H.e_core


def kinetic_basis(H: Hamiltonian) -> OrbitalBasis:
    energies, C = _ordered_eigh(H.h)
    return OrbitalBasis(BasisKind.KIN, C, energies)


class _Diis:
    """Pulay extrapolation of Fock matrices from their commutator errors."""

    def __init__(self, size: int):
        self.size = size
        self.focks = []
        self.errors = []

    def reset(self):
        self.focks.clear()
        self.errors.clear()

    def push(self, F: np.ndarray, error: np.ndarray):
        self.focks.append(F)
        self.errors.append(error)
        if len(self.focks) > self.size:
            self.focks.pop(0)
            self.errors.pop(0)

    def extrapolate(self) -> np.ndarray:
        m = len(self.focks)
        if m < 2:
            return self.focks[-1]
        B = -np.ones((m + 1, m + 1))
        B[m, m] = 0.0
        for i in range(m):
            for j in range(i + 1):
                B[i, j] = B[j, i] = float(np.sum(self.errors[i] * self.errors[j]))
        scale = np.max(np.abs(B[:m, :m]))
        if scale > 0:
            B[:m, :m] /= scale
        rhs = np.zeros(m + 1)
        rhs[m] = -1.0
        coefficients = np.linalg.lstsq(B, rhs, rcond=None)[0][:m]
        return sum(c * F for c, F in zip(coefficients, self.focks))


def solve_hf(H: Hamiltonian, n_up: int, n_down: int,
             max_iterations: int = SCF_MAX_ITERATIONS,
             tol: float = SCF_TOLERANCE,
             mixing: float = SCF_MIXING,
             level_shift: float = SCF_LEVEL_SHIFT,
             diis_space: int = SCF_DIIS_SPACE) -> OrbitalBasis:
    """
    Restricted closed-shell Hartree-Fock.

    The guess is the aufbau density of h. The first ``SCF_DIIS_START`` cycles damp the Fock
    matrix, keeping a fraction ``mixing`` of the new one; after that DIIS extrapolates over the
    last ``diis_space`` Fock matrices. Virtual orbitals are raised by ``level_shift`` before each
    diagonalization. The SCF stops when the Fock matrix of the current density commutes with it
    to ``tol`` and that density is the aufbau density of its own Fock matrix.
    """
    if n_up != n_down:
        raise NotImplementedError(f'open-shell SCF is not supported (n_up={n_up}, n_down={n_down})')
    if not 0 < n_up <= H.n_orb:
        raise ParameterError(f'need 0 < n_up <= {H.n_orb}, got {n_up}')
    if not 0 < mixing <= 1:
        raise ParameterError(f'mixing must lie in (0, 1], got {mixing}')
    if level_shift < 0:
        raise ParameterError(f'level_shift must be non-negative, got {level_shift}')

    P = _density(kinetic_basis(H).C, n_up)
    diis = _Diis(max(1, diis_space))
    identity = np.eye(H.n_orb)
    F_used = None
    residual = np.inf
    for iteration in range(1, max_iterations + 1):
        F = fock_matrix(H, P)
        error = F @ P - P @ F
        residual = float(np.linalg.norm(error))
        logger.debug('SCF iteration %d: commutator %.3e', iteration, residual)
        if residual < tol:
            energies, C = _ordered_eigh(F)
            aufbau = _density(C, n_up)
            if np.linalg.norm(aufbau - P) < _AUFBAU_TOLERANCE:
                energy = hf_energy(H, P)
                logger.debug('SCF converged in %d iterations: E_HF=%.10f eV', iteration, energy)
                return OrbitalBasis(BasisKind.HF, C, energies, energy, n_up)
            # a stationary density with a hole below the Fermi level; restart from its aufbau density
            logger.debug('SCF reached a non-aufbau density at iteration %d, dropping the level shift', iteration)
            level_shift = 0.0
            diis.reset()
            F_used = None
            P = aufbau
            continue

        diis.push(F, error)
        if iteration <= SCF_DIIS_START or F_used is None:
            F_used = F if F_used is None else (1.0 - mixing) * F_used + mixing * F
        else:
            F_used = diis.extrapolate()
        _, C = _ordered_eigh(F_used + level_shift * (identity - P))
        P = _density(C, n_up)
    raise ConvergenceError('SCF did not converge', residual, max_iterations)


def mixing_matrix(kin: OrbitalBasis, hf: OrbitalBasis) -> MixMatrix:
    """
    M = W diag(eps_HF) W^T with W the HF coefficients in the kinetic frame.
    """
    if kin.n_orb != hf.n_orb:
        raise ParameterError(f'kinetic basis has {kin.n_orb} orbitals, HF basis {hf.n_orb}')
    W = kin.C.T @ hf.C
    M = W @ np.diag(hf.energies) @ W.T
    return MixMatrix(0.5 * (M + M.T))


def hfplus_basis(H: Hamiltonian, hf: OrbitalBasis, kin: Optional[OrbitalBasis] = None) -> OrbitalBasis:
    """
    Eigenbasis of M' = 2M - diag(diag(M)), the HF mixing of the kinetic orbitals doubled,
    mapped back to the site frame.
    """
    if hf.n_orb != H.n_orb:
        raise ParameterError(f'HF basis has {hf.n_orb} orbitals, Hamiltonian {H.n_orb}')
    kin = kin or kinetic_basis(H)
    mix = mixing_matrix(kin, hf)
    mix.is_perturbative()
    energies, vectors = _ordered_eigh(mix.modified())
    C = fix_column_phases(kin.C @ vectors)
    return OrbitalBasis(BasisKind.HFPLUS, C, energies, None, hf.n_occ)


def _mo_integrals(H: Hamiltonian, basis: OrbitalBasis, n_occ: Optional[int]):
    n_occ = basis.n_occ if n_occ is None else n_occ
    if n_occ is None or not 0 < n_occ < H.n_orb:
        raise ParameterError(f'need an occupied count in (0, {H.n_orb}), got {n_occ}')
    V = rotate_integrals(H, basis.C).V
    ovov = V[:n_occ, n_occ:, :n_occ, n_occ:]
    return n_occ, ovov


def compute_t2(H: Hamiltonian, basis: OrbitalBasis, n_occ: Optional[int] = None) -> T2Amplitudes:
    """
    MP2 amplitudes t2[i,j,a,b] = (ia|jb) / (e_i + e_j - e_a - e_b) in ``basis``.
    """
    n_occ, ovov = _mo_integrals(H, basis, n_occ)
    e = basis.energies
    eo, ev = e[:n_occ], e[n_occ:]
    denominator = eo[:, None, None, None] + eo[None, :, None, None] - ev[None, None, :, None] - ev[None, None, None, :]
    small = np.abs(denominator) <= _GAP_TOLERANCE
    if small.any():
        i, j, a, b = (int(k) for k in np.argwhere(small)[0])
        raise DegeneracyError(f'vanishing MP2 denominator for orbitals ({i}, {j}, {a + n_occ}, {b + n_occ})')
    t2 = np.einsum('iajb->ijab', ovov) / denominator
    return T2Amplitudes(t2, T2Source.MP2, 'MP2')


def mp2_energy(H: Hamiltonian, basis: OrbitalBasis, t2: T2Amplitudes) -> float:
    """Closed-shell correlation energy sum t2 (2(ia|jb) - (ib|ja))."""
    _, ovov = _mo_integrals(H, basis, t2.n_occ)
    direct = np.einsum('iajb->ijab', ovov)
    exchange = np.einsum('ibja->ijab', ovov)
    return float(np.sum(t2.t2 * (2.0 * direct - exchange)))


def load_t2(path: str) -> T2Amplitudes:
    with open(path) as f:
        return T2Amplitudes.from_json(f.read())
