"""
Determinant-driven Hamiltonian action on a complete (n_up, n_down) sector.

The two-body part is applied as 1/2 sum (pq|rs) E_pq E_rs with the one-body correction
h_ps - 1/2 sum_q (pq|qs), so each sigma build is two passes of excitation operators around
one dense contraction over orbital pairs.
"""
import logging
from typing import List

import numpy as np
import scipy.sparse

from .determinant import SectorSpace
from .model import Hamiltonian
from .utils import excitation_sign, occupation_matrix

logger = logging.getLogger(__name__)


def excitation_operators(table: np.ndarray, n_orb: int) -> List[scipy.sparse.csr_matrix]:
    """
    Matrices of E_pq = a+_p a_q over one spin's strings, flattened as index p * n_orb + q.
    """
    size = len(table)
    position = {int(s): k for k, s in enumerate(table)}
    entries = [([], [], []) for _ in range(n_orb * n_orb)]
    for col, s in enumerate(table.tolist()):
        for q in range(n_orb):
            if not (s >> q) & 1:
                continue
            for p in range(n_orb):
                if p != q and (s >> p) & 1:
                    continue
                target = s ^ (1 << q) ^ (1 << p) if p != q else s
                rows, cols, vals = entries[p * n_orb + q]
                rows.append(position[target])
                cols.append(col)
                vals.append(excitation_sign(s, q, p) if p != q else 1)
    return [scipy.sparse.csr_matrix((np.asarray(v, dtype=np.float64), (r, c)), shape=(size, size))
            for r, c, v in entries]


class SectorHamiltonian:
    """
    Matrix-free H on the full sector; vectors are flat with the beta index fastest.
    """

    def __init__(self, H: Hamiltonian, n_up: int, n_down: int):
        self.H = H
        self.space = SectorSpace(H.n_orb, n_up, n_down)
        n = H.n_orb
        self._ea = excitation_operators(self.space.alpha_strings, n)
        self._eb = excitation_operators(self.space.beta_strings, n)
        self._active = [pq for pq in range(n * n) if self._ea[pq].nnz or self._eb[pq].nnz]
        self._k = (H.h - 0.5 * np.einsum('pqqs->ps', H.V)).ravel()
        self._v = 0.5 * H.V.reshape(n * n, n * n)
        logger.debug('sector (%d, %d) of %d orbitals: dimension %d', n_up, n_down, n, self.space.dimension)

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def _excite(self, pq: int, C: np.ndarray) -> np.ndarray:
        return self._ea[pq] @ C + (self._eb[pq] @ C.T).T

    def matvec(self, c: np.ndarray) -> np.ndarray:
        na, nb = self.space.shape
        C = np.asarray(c, dtype=np.float64).reshape(na, nb)
        n2 = self.H.n_orb ** 2
        D = np.zeros((n2, na, nb))
        for pq in self._active:
            D[pq] = self._excite(pq, C)
        G = (self._v @ D.reshape(n2, -1)).reshape(n2, na, nb)
        sigma = self.H.e_core * C
        for pq in self._active:
            sigma = sigma + self._excite(pq, G[pq] + self._k[pq] * C)
        return sigma.ravel()

    def diagonal(self) -> np.ndarray:
        V = self.H.V
        hd = np.diag(self.H.h)
        J = np.einsum('kkll->kl', V)
        K = np.einsum('kllk->kl', V)
        occ_a = occupation_matrix(self.space.alpha_strings, self.H.n_orb)
        occ_b = occupation_matrix(self.space.beta_strings, self.H.n_orb)
        same_a = occ_a @ hd + 0.5 * np.einsum('ik,kl,il->i', occ_a, J - K, occ_a)
        same_b = occ_b @ hd + 0.5 * np.einsum('ik,kl,il->i', occ_b, J - K, occ_b)
        diag = same_a[:, None] + same_b[None, :] + occ_a @ J @ occ_b.T + self.H.e_core
        return diag.ravel()

    def dense(self) -> np.ndarray:
        return np.column_stack([self.matvec(e) for e in np.eye(self.dimension)])
