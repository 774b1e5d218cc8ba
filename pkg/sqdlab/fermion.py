"""
Dense Jordan-Wigner reference operators on the full 2^(2 n_orb) Fock space.

Spin-orbital m is qubit m (alpha p is m = p, beta p is m = n_orb + p) and
a_m |x> = (-1)^popcount(x & (2^m - 1)) |x ^ 2^m> when bit m of x is set.
These builders are exponential in the orbital count and serve as oracles for the
sector engines.
"""
from functools import lru_cache
from typing import List

import numpy as np
import scipy.linalg
import scipy.sparse

from .model import Hamiltonian
from .utils import popcount_array, strings


@lru_cache(maxsize=8)
def annihilation_operators(n_modes: int) -> List[scipy.sparse.csr_matrix]:
    dim = 1 << n_modes
    index = np.arange(dim, dtype=np.int64)
    ops = []
    for m in range(n_modes):
        src = index[(index >> m) & 1 == 1]
        sign = np.where(popcount_array(src & ((1 << m) - 1)) % 2, -1.0, 1.0)
        ops.append(scipy.sparse.csr_matrix((sign, (src ^ (1 << m), src)), shape=(dim, dim)))
    return ops


def number_operator(n_modes: int, m: int) -> scipy.sparse.csr_matrix:
    a = annihilation_operators(n_modes)[m]
    return (a.T @ a).tocsr()


def hamiltonian_matrix(H: Hamiltonian) -> scipy.sparse.csr_matrix:
    """Second-quantized H over every particle number."""
    n = H.n_orb
    a = annihilation_operators(2 * n)
    dim = 1 << (2 * n)
    total = H.e_core * scipy.sparse.identity(dim, format='csr')
    spins = (0, n)
    for s in spins:
        for p in range(n):
            for q in range(n):
                if H.h[p, q]:
                    total = total + H.h[p, q] * (a[s + p].T @ a[s + q])
    for s in spins:
        for t in spins:
            for p, q, r, u in zip(*np.nonzero(H.V)):
                term = a[s + p].T @ a[t + r].T @ a[t + u] @ a[s + q]
                total = total + 0.5 * H.V[p, q, r, u] * term
    return total.tocsr()


def s_squared(n_orb: int) -> scipy.sparse.csr_matrix:
    """Total spin S^2 = S-S+ + Sz(Sz + 1)."""
    a = annihilation_operators(2 * n_orb)
    dim = 1 << (2 * n_orb)
    s_plus = scipy.sparse.csr_matrix((dim, dim))
    sz = scipy.sparse.csr_matrix((dim, dim))
    for p in range(n_orb):
        s_plus = s_plus + a[p].T @ a[n_orb + p]
        sz = sz + 0.5 * (a[p].T @ a[p] - a[n_orb + p].T @ a[n_orb + p])
    return (s_plus.T @ s_plus + sz @ sz + sz).tocsr()


def orbital_rotation_operator(U: np.ndarray) -> np.ndarray:
    """
    Dense exp(sum_pq K_pq a+_p a_q) on both spins with exp(K) = U, so a+_j maps to
    sum_i U[i, j] a+_i.
    """
    n = U.shape[0]
    K = scipy.linalg.logm(np.asarray(U, dtype=np.complex128))
    a = annihilation_operators(2 * n)
    dim = 1 << (2 * n)
    generator = scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
    for s in (0, n):
        for p in range(n):
            for q in range(n):
                if abs(K[p, q]) > 1e-15:
                    generator = generator + K[p, q] * (a[s + p].T @ a[s + q])
    return scipy.linalg.expm(generator.toarray())


def jastrow_diagonal(J_same: np.ndarray, J_opp: np.ndarray) -> np.ndarray:
    """Diagonal of exp(i J) for the UCJ Jastrow factor over every basis state."""
    n = J_same.shape[0]
    index = np.arange(1 << (2 * n), dtype=np.int64)
    occ = ((index[:, None] >> np.arange(2 * n)[None, :]) & 1).astype(np.float64)
    na, nb = occ[:, :n], occ[:, n:]
    phase = 0.5 * (np.einsum('xp,pq,xq->x', na, J_same, na) + np.einsum('xp,pq,xq->x', nb, J_same, nb))
    phase += np.einsum('xp,pq,xq->x', na, J_opp, nb)
    return np.exp(1j * phase)


def ucj_operator(p) -> np.ndarray:
    """Dense UCJ unitary on the full Fock space."""
    total = np.eye(1 << (2 * p.n_orb), dtype=np.complex128)
    for layer in p.layers:
        rotation = orbital_rotation_operator(layer.U)
        jastrow = jastrow_diagonal(layer.J_same * p.same_spin_mask, layer.J_opp * p.opp_spin_mask)
        total = rotation @ (jastrow[:, None] * rotation.conj().T) @ total
    return orbital_rotation_operator(p.final_rotation) @ total


def sector_indices(n_orb: int, n_up: int, n_down: int) -> np.ndarray:
    """Full-space indices of the sector basis in flat (alpha, beta) order, beta fastest."""
    alpha, beta = strings(n_orb, n_up), strings(n_orb, n_down)
    return (alpha[:, None] | (beta[None, :] << n_orb)).ravel()
