import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .constants import DAVIDSON_MAX_ITERATIONS, DAVIDSON_MAX_SUBSPACE, DAVIDSON_TOLERANCE, DENSE_SOLVE_DIMENSION

logger = logging.getLogger(__name__)

_SEED_VECTORS = 4
_PRECONDITIONER_FLOOR = 1e-4
_LINEAR_DEPENDENCE = 1e-8


class ConvergenceError(RuntimeError):
    """
    An iterative solver stopped without meeting its tolerance.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f'{message} (residual {residual:.3e} after {iterations} iterations)')
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class Eigenpair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int


def dense_lowest(matrix: np.ndarray) -> Eigenpair:
    matrix = np.asarray(matrix, dtype=np.float64)
    values, vectors = scipy.linalg.eigh(matrix, subset_by_index=[0, 0])
    v = vectors[:, 0]
    residual = float(np.linalg.norm(matrix @ v - values[0] * v))
    return Eigenpair(float(values[0]), v, residual, 0)


def davidson(matvec: Callable[[np.ndarray], np.ndarray], diagonal: np.ndarray,
             guess: Optional[np.ndarray] = None,
             tol: float = DAVIDSON_TOLERANCE,
             max_iterations: int = DAVIDSON_MAX_ITERATIONS,
             max_subspace: int = DAVIDSON_MAX_SUBSPACE) -> Eigenpair:
    """
    Lowest eigenpair of a real symmetric operator given by ``matvec``.

    The start space holds the guess (when given) and the unit vectors of the lowest diagonal
    entries. Each iteration adds the diagonally preconditioned residual and the raw residual.
    Once the subspace would exceed ``max_subspace`` it restarts from the lowest Ritz vectors and
    the previous iterate. Convergence means ||Av - theta v|| < tol * max(1, |theta|).
    """
    diagonal = np.asarray(diagonal, dtype=np.float64)
    n = diagonal.size
    if n == 0:
        raise ValueError('cannot diagonalize an empty operator')
    if max_subspace < 4:
        raise ValueError(f'max_subspace must be at least 4, got {max_subspace}')
    if guess is not None:
        guess = np.asarray(guess, dtype=np.float64)
        if guess.shape != (n,):
            raise ValueError(f'guess has shape {guess.shape}, operator dimension is {n}')
        if np.linalg.norm(guess) < 1e-10:
            raise ValueError('initial guess has zero norm')
    if n == 1:
        value = float(matvec(np.ones(1))[0])
        return Eigenpair(value, np.ones(1), 0.0, 0)

    n_keep = max(1, (max_subspace - 2) // 2)
    n_seed = min(n, _SEED_VECTORS, max_subspace - 2 - (guess is not None))
    start = [] if guess is None else [guess]
    for k in np.argsort(diagonal, kind='stable')[:n_seed]:
        e = np.zeros(n)
        e[k] = 1.0
        start.append(e)
    basis, images = np.empty((n, 0)), np.empty((n, 0))
    basis, images = _expand(basis, images, start, matvec)

    previous = None
    residual = np.inf
    for iteration in range(1, max_iterations + 1):
        small = basis.T @ images
        values, vectors = np.linalg.eigh(0.5 * (small + small.T))
        theta, s = float(values[0]), vectors[:, 0]
        x = basis @ s
        ax = images @ s
        r = ax - theta * x
        residual = float(np.linalg.norm(r))
        logger.debug('davidson iteration %d: theta=%.12f residual=%.3e subspace=%d',
                     iteration, theta, residual, basis.shape[1])
        if residual < tol * max(1.0, abs(theta)):
            norm = np.linalg.norm(x)
            return Eigenpair(theta, x / norm, residual, iteration)

        denominator = theta - diagonal
        floor = _PRECONDITIONER_FLOOR * max(1.0, abs(theta))
        small_denominator = np.abs(denominator) < floor
        denominator[small_denominator] = np.where(denominator[small_denominator] < 0, -floor, floor)
        t = r / denominator

        if basis.shape[1] + 2 > max_subspace:
            k = min(n_keep, basis.shape[1])
            basis, images = basis @ vectors[:, :k], images @ vectors[:, :k]
            if previous is not None:
                basis, images = _append_known(basis, images, *previous)
        previous = (x, ax)
        size = basis.shape[1]
        basis, images = _expand(basis, images, [t, r], matvec)
        if basis.shape[1] == size:
            rng = np.random.default_rng(iteration)
            basis, images = _expand(basis, images, [rng.standard_normal(n)], matvec)
    raise ConvergenceError('Davidson did not converge', residual, max_iterations)


def _orthogonalize(t, basis):
    for _ in range(2):
        t = t - basis @ (basis.T @ t)
    return t


def _expand(basis, images, candidates, matvec):
    """Append the candidates that survive orthogonalization, with their images."""
    for t in candidates:
        scale = np.linalg.norm(t)
        if scale == 0.0 or basis.shape[1] >= basis.shape[0]:
            continue
        t = _orthogonalize(t / scale, basis)
        norm = np.linalg.norm(t)
        if norm < _LINEAR_DEPENDENCE:
            continue
        t /= norm
        basis = np.column_stack([basis, t])
        images = np.column_stack([images, matvec(t)])
    return basis, images


def _append_known(basis, images, x, ax):
    """Append a vector whose image is already known, keeping the basis orthonormal."""
    t, at = x, ax
    for _ in range(2):
        overlap = basis.T @ t
        t, at = t - basis @ overlap, at - images @ overlap
    norm = np.linalg.norm(t)
    if norm < _LINEAR_DEPENDENCE or basis.shape[1] >= basis.shape[0]:
        return basis, images
    return np.column_stack([basis, t / norm]), np.column_stack([images, at / norm])


def lowest_eigenpair(matvec: Callable[[np.ndarray], np.ndarray], diagonal: np.ndarray,
                     dense: Optional[Callable[[], np.ndarray]] = None, **kwargs) -> Eigenpair:
    """
    Dense solve below the dense-fallback dimension, Davidson above it.

    :param dense: builds the explicit matrix; defaults to applying ``matvec`` to unit vectors
    """
    n = np.asarray(diagonal).size
    if n < DENSE_SOLVE_DIMENSION:
        if dense is not None:
            matrix = dense()
        else:
            matrix = np.column_stack([matvec(e) for e in np.eye(n)]) if n else np.zeros((0, 0))
        if n == 0:
            raise ValueError('cannot diagonalize an empty operator')
        return dense_lowest(0.5 * (matrix + matrix.T))
    return davidson(matvec, diagonal, **kwargs)
