import copy
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse
from scipy.special import comb

from .constants import DEGENERACY_TOLERANCE, EXPLICIT_BASIS_MAX, FCI_MAX_DIMENSION
from .davidson import lowest_eigenpair
from .determinant import Determinant, DeterminantBasis, ResourceGuardError, SectorError
from .fci import SectorHamiltonian
from .kernels import connected_pairs, matrix_element
from .model import ChainSpec, Hamiltonian
from .orbitals import DegeneracyError, OrbitalBasis
from .utils import occupation_matrix, popcount_array

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GroundState:
    energy: float
    vector: np.ndarray
    basis: DeterminantBasis

    def __post_init__(self):
        v = np.array(self.vector, dtype=np.float64, copy=True)
        v /= np.linalg.norm(v)
        v.setflags(write=False)
        object.__setattr__(self, 'vector', v)
        object.__setattr__(self, 'energy', float(self.energy))

    def weights(self) -> np.ndarray:
        return self.vector ** 2

    def amplitude(self, det: Determinant) -> float:
        k = self.basis.index(det)
        return float(self.vector[k]) if k >= 0 else 0.0


@dataclass(frozen=True)
class ExcitationProfile:
    """Ground-state weight per excitation number, in total and within a selected basis."""
    n_ex: np.ndarray
    total: np.ndarray
    covered: np.ndarray


def slater_condon(di: Determinant, dj: Determinant, H: Hamiltonian) -> float:
    """<di|H|dj> including the core energy on the diagonal."""
    if di.n_up() != dj.n_up() or di.n_down() != dj.n_down():
        return 0.0
    value = float(matrix_element(H.h, H.V, di.alpha, di.beta, dj.alpha, dj.beta, H.n_orb))
    return value + H.e_core if di == dj else value


def sector_dimension(n_orb: int, n_up: int, n_down: int) -> int:
    return int(comb(n_orb, n_up, exact=True) * comb(n_orb, n_down, exact=True))


def _check_guard(n_orb: int, n_up: int, n_down: int, limit: int = FCI_MAX_DIMENSION) -> int:
    dim = sector_dimension(n_orb, n_up, n_down)
    if dim > limit:
        raise ResourceGuardError(f'({n_up}, {n_down}) sector of {n_orb} orbitals', dim, limit,
                                 'raise SQDLAB_FCI_MAX_DIMENSION to allow it')
    return dim


class ProjectedHamiltonian:
    """
    Selected-CI Hamiltonian over a growing determinant basis.

    Small bases are held as an explicit sparse Slater-Condon matrix that is extended
    column by column when determinants are appended. Larger bases are diagonalized through
    the full-sector operator restricted to the basis.
    """

    def __init__(self, H: Hamiltonian, n_up: int, n_down: int, explicit_max: int = EXPLICIT_BASIS_MAX):
        self.H = H
        self.basis = DeterminantBasis(H.n_orb, n_up, n_down)
        self.explicit_max = explicit_max
        self._rows, self._cols, self._vals = [], [], []
        self._built = 0
        self._sector: Optional[SectorHamiltonian] = None
        self._last: Optional[np.ndarray] = None

    def extend(self, alpha, beta) -> DeterminantBasis:
        self.basis = self.basis.extend(alpha, beta)
        return self.basis

    def is_prefix_of(self, basis: DeterminantBasis) -> bool:
        k = len(self.basis)
        return (k <= len(basis) and np.array_equal(basis.alpha[:k], self.basis.alpha)
                and np.array_equal(basis.beta[:k], self.basis.beta))

    def copy(self) -> 'ProjectedHamiltonian':
        """An independent cache sharing the couplings built so far."""
        other = copy.copy(self)
        other._rows, other._cols, other._vals = list(self._rows), list(self._cols), list(self._vals)
        return other

    def _build_explicit(self):
        if self._built == len(self.basis):
            return
        rows, cols, vals = connected_pairs(self.basis.alpha, self.basis.beta, self._built,
                                           self.H.h, self.H.V, self.H.n_orb)
        logger.debug('appended %d determinants: %d new couplings', len(self.basis) - self._built, rows.size)
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(vals)
        self._built = len(self.basis)

    def matrix(self) -> scipy.sparse.csr_matrix:
        self._build_explicit()
        n = len(self.basis)
        rows, cols, vals = (np.concatenate(x) if x else np.zeros(0) for x in (self._rows, self._cols, self._vals))
        rows, cols = rows.astype(np.int64), cols.astype(np.int64)
        upper = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        lower = scipy.sparse.triu(upper, k=1).T
        return (upper + lower + self.H.e_core * scipy.sparse.identity(n, format='csr')).tocsr()

    def _guess(self) -> Optional[np.ndarray]:
        if self._last is None:
            return None
        guess = np.zeros(len(self.basis))
        guess[:self._last.size] = self._last
        return guess

    def ground_state(self) -> GroundState:
        n = len(self.basis)
        if n == 0:
            raise ValueError('cannot diagonalize an empty determinant basis')
        if n <= self.explicit_max:
            A = self.matrix()
            pair = lowest_eigenpair(lambda v: A @ v, A.diagonal(), dense=A.toarray, guess=self._guess())
        else:
            if self._sector is None:
                _check_guard(self.H.n_orb, self.basis.n_up, self.basis.n_down)
                self._sector = SectorHamiltonian(self.H, self.basis.n_up, self.basis.n_down)
                self._sector_diagonal = self._sector.diagonal()
            pos = self._sector.space.positions(self.basis.alpha, self.basis.beta)
            full = np.zeros(self._sector.dimension)

            def matvec(v):
                full[:] = 0.0
                full[pos] = v
                return self._sector.matvec(full)[pos]

            pair = lowest_eigenpair(matvec, self._sector_diagonal[pos], guess=self._guess())
        self._last = pair.vector
        logger.debug('selected CI over %d determinants: E=%.10f (%d iterations)', n, pair.value, pair.iterations)
        return GroundState(pair.value, pair.vector, self.basis)


def diagonalize(basis: DeterminantBasis, H: Hamiltonian,
                cache: Optional[ProjectedHamiltonian] = None) -> GroundState:
    """
    Lowest eigenpair of H projected onto ``basis``.

    :param cache: a ProjectedHamiltonian whose basis is a prefix of ``basis``; its couplings are
        reused and only the new determinants are coupled in. The cache itself is left unchanged,
        and a cache that is not a prefix is ignored.
    """
    if cache is not None and not cache.basis.same_sector(basis):
        raise SectorError('cached Hamiltonian and basis belong to different sectors')
    if cache is not None and cache.is_prefix_of(basis):
        work = cache.copy()
    else:
        work = ProjectedHamiltonian(H, basis.n_up, basis.n_down)
    work.extend(basis.alpha, basis.beta)
    return work.ground_state()


def fci_ground_state(H: Hamiltonian, spec: ChainSpec) -> GroundState:
    """
    Ground state over the complete (spec.n_up, spec.n_down) sector.
    """
    _check_guard(H.n_orb, spec.n_up, spec.n_down)
    sector = SectorHamiltonian(H, spec.n_up, spec.n_down)
    pair = lowest_eigenpair(sector.matvec, sector.diagonal(), dense=sector.dense)
    logger.info('FCI (%d, %d) of %d orbitals: E=%.10f eV over %d determinants',
                spec.n_up, spec.n_down, H.n_orb, pair.value, sector.dimension)
    return GroundState(pair.value, pair.vector, sector.space.basis())


def _positions_in(g: GroundState, basis: DeterminantBasis) -> np.ndarray:
    if not g.basis.same_sector(basis):
        raise SectorError(f'basis sector ({basis.n_up}, {basis.n_down}) differs from the ground state '
                          f'sector ({g.basis.n_up}, {g.basis.n_down})')
    pos = g.basis.positions(basis.alpha, basis.beta)
    if (pos < 0).any():
        raise SectorError('basis contains determinants outside the ground state support')
    return pos


def missing_fraction(g: GroundState, basis: DeterminantBasis) -> float:
    """f = 1 - sum over the basis of |<g|i>|^2."""
    pos = _positions_in(g, basis)
    return float(np.clip(1.0 - np.sum(g.vector[pos] ** 2), 0.0, 1.0))


def excitation_numbers(basis: DeterminantBasis) -> np.ndarray:
    """Electrons above the Fermi level of each determinant, counted per spin."""
    return popcount_array(basis.alpha >> basis.n_up) + popcount_array(basis.beta >> basis.n_down)


def excitation_profile(g: GroundState, hf: OrbitalBasis, basis: DeterminantBasis) -> ExcitationProfile:
    """
    Ground-state weight binned by excitation number relative to the HF determinant.

    ``g`` must be expressed in the HF orbitals.
    """
    n_orb, n_up, n_down = g.basis.n_orb, g.basis.n_up, g.basis.n_down
    for n_occ in {n_up, n_down}:
        if 0 < n_occ < n_orb and hf.energies[n_occ] - hf.energies[n_occ - 1] <= DEGENERACY_TOLERANCE:
            raise DegeneracyError(f'HF orbitals {n_occ - 1} and {n_occ} are degenerate at the Fermi level')
    top = 2 * min(n_up, n_orb - n_up) if n_up == n_down else min(n_up, n_orb - n_up) + min(n_down, n_orb - n_down)
    n_ex = excitation_numbers(g.basis)
    w = g.weights()
    total = np.bincount(n_ex, weights=w, minlength=top + 1)[:top + 1]
    covered_w = np.zeros_like(w)
    pos = _positions_in(g, basis)
    covered_w[pos] = w[pos]
    covered = np.bincount(n_ex, weights=covered_w, minlength=top + 1)[:top + 1]
    return ExcitationProfile(np.arange(top + 1), total, covered)


def energy_error(basis: DeterminantBasis, H: Hamiltonian, reference_fci: Union[GroundState, float],
                 cache: Optional[ProjectedHamiltonian] = None) -> float:
    reference = reference_fci.energy if isinstance(reference_fci, GroundState) else float(reference_fci)
    return diagonalize(basis, H, cache).energy - reference


def orbital_occupations(g: GroundState, spec: Optional[ChainSpec] = None) -> np.ndarray:
    """Spin-summed diagonal one-particle density per spatial orbital."""
    n_orb = g.basis.n_orb if spec is None else spec.n_orb
    w = g.weights()
    return occupation_matrix(g.basis.alpha, n_orb).T @ w + occupation_matrix(g.basis.beta, n_orb).T @ w


def spin_correlations(g: GroundState) -> np.ndarray:
    """<Sz_p Sz_q> over spatial orbitals."""
    n_orb = g.basis.n_orb
    s = occupation_matrix(g.basis.alpha, n_orb) - occupation_matrix(g.basis.beta, n_orb)
    return 0.25 * (s.T * g.weights()) @ s
